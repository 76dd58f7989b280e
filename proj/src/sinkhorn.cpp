#include <algorithm>
#include <cmath>
#include <limits>

#include "otqap/linear_ot.hpp"

namespace otqap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Shifts mass so both marginals hold exactly (up to rounding): shrink rows and
// columns that overshoot, then add the rank-one correction for the deficit.
void round_to_polytope(Matrix& p, const Vector& h, const Vector& g)
{
    Vector rs = p.rowwise().sum();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (rs[i] > h[i])
            p.row(i) *= h[i] / rs[i];
    }
    Vector cs = p.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (cs[j] > g[j])
            p.col(j) *= g[j] / cs[j];
    }
    const Vector er = (h - p.rowwise().sum()).cwiseMax(0.0);
    const Vector ec = (g - p.colwise().sum().transpose()).cwiseMax(0.0);
    const double total = er.sum();
    if (total > 0.0)
        p.noalias() += er * ec.transpose() / total;
}

double log_sum_exp_row(const Matrix& c, Eigen::Index i, const Vector& pot, double eps)
{
    double mx = kNegInf;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        mx = std::max(mx, (pot[j] - c(i, j)) / eps);
    if (mx == kNegInf)
        return kNegInf;
    double s = 0.0;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        s += std::exp((pot[j] - c(i, j)) / eps - mx);
    return mx + std::log(s);
}

double log_sum_exp_col(const Matrix& c, Eigen::Index j, const Vector& pot, double eps)
{
    double mx = kNegInf;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        mx = std::max(mx, (pot[i] - c(i, j)) / eps);
    if (mx == kNegInf)
        return kNegInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        s += std::exp((pot[i] - c(i, j)) / eps - mx);
    return mx + std::log(s);
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

constexpr int kAnnealStageIters = 50;

void log_half_steps(const Matrix& cost, const Vector& log_a, const Vector& log_b, double eps, Vector& f, Vector& gp)
{
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        if (log_a[i] == kNegInf) {
            f[i] = kNegInf;
            continue;
        }
        const double lse = log_sum_exp_row(cost, i, gp, eps);
        if (lse == kNegInf)
            throw Error(ErrorCode::NumericalUnderflow, "row lost all mass");
        f[i] = eps * (log_a[i] - lse);
    }
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
        if (log_b[j] == kNegInf) {
            gp[j] = kNegInf;
            continue;
        }
        const double lse = log_sum_exp_col(cost, j, f, eps);
        if (lse == kNegInf)
            throw Error(ErrorCode::NumericalUnderflow, "column lost all mass");
        gp[j] = eps * (log_b[j] - lse);
    }
}

}  // namespace

SinkhornResult sinkhorn(const Matrix& cost, const Histogram& h, const Histogram& g, double epsilon, int max_iter,
                        double tol, SinkhornWarmStart* warm)
{
    if (cost.rows() != h.size() || cost.cols() != g.size())
        throw Error(ErrorCode::DimensionMismatch, "cost shape does not match marginals");
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    require_finite(cost, "cost");

    const Eigen::Index n = cost.rows();
    const Eigen::Index m = cost.cols();
    const Vector& a = h.weights();
    const Vector& b = g.weights();
    const bool use_log = cost.cwiseAbs().maxCoeff() / epsilon > 500.0;
    const bool have_warm = warm != nullptr && warm->f.size() == n && warm->g.size() == m && warm->g.allFinite();

    SinkhornResult out{Coupling::product(h, g), 0.0, 0, false, use_log, 0.0};
    Matrix plan;
    Vector f(n), gp(m);

    if (!use_log) {
        const Matrix kernel = (-cost / epsilon).array().exp().matrix();
        Vector u = Vector::Ones(n);
        Vector v = have_warm ? Vector((warm->g / epsilon).array().exp().matrix()) : Vector::Ones(m);
        if (!v.allFinite() || (v.array() == 0.0).any())
            v.setOnes();
        double err = std::numeric_limits<double>::infinity();
        int it = 0;
        while (it < max_iter) {
            ++it;
            const Vector kv = kernel * v;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (a[i] == 0.0) {
                    u[i] = 0.0;
                } else if (kv[i] == 0.0) {
                    throw Error(ErrorCode::NumericalUnderflow, "kernel row underflow; increase epsilon");
                } else {
                    u[i] = a[i] / kv[i];
                }
            }
            const Vector ktu = kernel.transpose() * u;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (b[j] == 0.0) {
                    v[j] = 0.0;
                } else if (ktu[j] == 0.0) {
                    throw Error(ErrorCode::NumericalUnderflow, "kernel column underflow; increase epsilon");
                } else {
                    v[j] = b[j] / ktu[j];
                }
            }
            err = (u.cwiseProduct(kernel * v) - a).cwiseAbs().maxCoeff();
            if (!std::isfinite(err))
                throw Error(ErrorCode::NumericalUnderflow, "non-finite scalings; increase epsilon");
            if (err < tol)
                break;
        }
        out.iterations = it;
        out.marginal_error = err;
        out.converged = err < tol;
        plan = u.asDiagonal() * kernel * v.asDiagonal();
        for (Eigen::Index i = 0; i < n; ++i)
            f[i] = epsilon * safe_log(u[i]);
        for (Eigen::Index j = 0; j < m; ++j)
            gp[j] = epsilon * safe_log(v[j]);
    } else {
        Vector log_a(n), log_b(m);
        for (Eigen::Index i = 0; i < n; ++i)
            log_a[i] = safe_log(a[i]);
        for (Eigen::Index j = 0; j < m; ++j)
            log_b[j] = safe_log(b[j]);
        gp = have_warm ? warm->g : Vector::Zero(m);
        f.setZero();
        int it = 0;
        // cold starts anneal epsilon down from a coarse value; each stage warm-starts the next
        double stage = have_warm ? epsilon : std::max(epsilon, cost.cwiseAbs().maxCoeff() / 100.0);
        while (stage > epsilon && it < max_iter) {
            const int budget = std::min(it + kAnnealStageIters, max_iter);
            while (it < budget) {
                ++it;
                log_half_steps(cost, log_a, log_b, stage, f, gp);
            }
            stage = std::max(epsilon, stage / 2.0);
        }
        double err = std::numeric_limits<double>::infinity();
        while (it < max_iter) {
            ++it;
            log_half_steps(cost, log_a, log_b, epsilon, f, gp);
            if (it <= 10 || it % 5 == 0 || it == max_iter) {
                err = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double row = a[i] == 0.0 ? 0.0 : std::exp(f[i] / epsilon + log_sum_exp_row(cost, i, gp, epsilon));
                    err = std::max(err, std::abs(row - a[i]));
                }
                if (!std::isfinite(err))
                    throw Error(ErrorCode::NumericalUnderflow, "non-finite potentials");
                if (err < tol)
                    break;
            }
        }
        out.iterations = it;
        out.marginal_error = err;
        out.converged = err < tol;
        plan.resize(n, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < n; ++i)
                plan(i, j) = (a[i] == 0.0 || b[j] == 0.0) ? 0.0 : std::exp((f[i] + gp[j] - cost(i, j)) / epsilon);
        }
    }

    if (warm != nullptr) {
        warm->f = f;
        warm->g = gp;
    }
    round_to_polytope(plan, a, b);
    out.objective = cost.cwiseProduct(plan).sum();
    out.coupling = Coupling(std::move(plan), h, g);
    return out;
}

Coupling sinkhorn_project(const Matrix& raw, const Histogram& h, const Histogram& g, double delta, int max_sweeps,
                          int* sweeps_out)
{
    if (raw.rows() != h.size() || raw.cols() != g.size())
        throw Error(ErrorCode::DimensionMismatch, "matrix shape does not match marginals");
    if (!(delta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    require_finite(raw, "matrix");
    if (!(raw.array() > 0.0).all())
        throw Error(ErrorCode::InvalidArgument, "projection needs a strictly positive matrix");

    const Vector& a = h.weights();
    const Vector& b = g.weights();
    Matrix p = raw;
    auto errors = [&] {
        const double re = (p.rowwise().sum() - a).cwiseAbs().maxCoeff();
        const double ce = (p.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
        return std::max(re, ce);
    };
    int sweeps = 0;
    while (errors() >= delta) {
        if (sweeps >= max_sweeps)
            throw Error(ErrorCode::NoConvergence, "projection did not reach delta after " +
                                                      std::to_string(max_sweeps) + " sweeps");
        const Vector rs = p.rowwise().sum();
        p = (a.array() / rs.array()).matrix().asDiagonal() * p;
        const Vector cs = p.colwise().sum().transpose();
        p = p * (b.array() / cs.array()).matrix().asDiagonal();
        ++sweeps;
    }
    if (sweeps_out != nullptr)
        *sweeps_out = sweeps;
    return Coupling(std::move(p), h, g);
}

}  // namespace otqap
