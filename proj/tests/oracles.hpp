#pragma once

// Reference computations written without the library's kernels. Tests compare the
// library against these.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "otqap/core.hpp"
#include "otqap/cqap.hpp"

namespace oracle {

using otqap::Matrix;

inline double lap_brute_force(const Matrix& cost)
{
    std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i)
            s += cost(static_cast<Eigen::Index>(i), perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline double gw_quadruple(const Matrix& c1, const Matrix& c2, const Matrix& p)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < c1.rows(); ++i)
        for (Eigen::Index j = 0; j < c1.rows(); ++j)
            for (Eigen::Index k = 0; k < c2.rows(); ++k)
                for (Eigen::Index l = 0; l < c2.rows(); ++l) {
                    const double d = c1(i, j) - c2(k, l);
                    s += d * d * p(i, k) * p(j, l);
                }
    return s;
}

inline Matrix gw_finite_difference(const Matrix& c1, const Matrix& c2, const Matrix& p, double step = 1e-6)
{
    Matrix g(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            Matrix hi = p, lo = p;
            hi(i, k) += step;
            lo(i, k) -= step;
            g(i, k) = (gw_quadruple(c1, c2, hi) - gw_quadruple(c1, c2, lo)) / (2.0 * step);
        }
    return g;
}

inline double cqap_direct(const otqap::CqapInstance& inst, const Eigen::MatrixXi& x)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (!x(i, j))
                continue;
            s += inst.linear_cost(i, j);
            for (Eigen::Index k = 0; k < x.rows(); ++k)
                for (Eigen::Index l = 0; l < x.cols(); ++l)
                    if (x(k, l))
                        s += inst.flow(i, k) * inst.distance(j, l);
        }
    return s;
}

inline bool cqap_feasible(const otqap::CqapInstance& inst, const Eigen::MatrixXi& x)
{
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        long load = 0;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            load += x(i, j) * inst.demand[j];
        if (load > inst.capacity[i])
            return false;
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        long cover = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            cover += x(i, j) * inst.capacity[i];
        if (cover < inst.demand[j])
            return false;
    }
    return true;
}

struct BruteForce {
    bool feasible = false;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Eigen::MatrixXi> optimizers;
};

// Every binary n x m matrix, no pruning.
inline BruteForce cqap_brute_force(const otqap::CqapInstance& inst)
{
    const auto n = inst.agents();
    const auto m = inst.tasks();
    const int bits = static_cast<int>(n * m);
    BruteForce out;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
        Eigen::MatrixXi x(n, m);
        for (int b = 0; b < bits; ++b)
            x(b / m, b % m) = static_cast<int>((mask >> b) & 1U);
        if (!cqap_feasible(inst, x))
            continue;
        out.feasible = true;
        const double v = otqap::cqap_objective(inst, otqap::AssignmentMatrix(x));
        if (v < out.best) {
            out.best = v;
            out.optimizers.clear();
        }
        if (v == out.best)
            out.optimizers.push_back(x);
    }
    return out;
}

// Random integer-position instance; no feasibility guarantee.
inline otqap::CqapInstance random_instance(otqap::Rng& rng, int n, int m, int max_units = 6)
{
    otqap::CqapInstance inst;
    inst.agent_pos.resize(n, 2);
    inst.task_pos.resize(m, 2);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 2; ++c)
            inst.agent_pos(i, c) = static_cast<double>(rng.uniform_int(0, 10));
    for (int j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c)
            inst.task_pos(j, c) = static_cast<double>(rng.uniform_int(0, 10));
    for (int i = 0; i < n; ++i)
        inst.capacity.push_back(static_cast<int>(rng.uniform_int(1, max_units)));
    for (int j = 0; j < m; ++j)
        inst.demand.push_back(static_cast<int>(rng.uniform_int(1, max_units)));
    auto dist = [](const Matrix& a, const Matrix& b) {
        Matrix d(a.rows(), b.rows());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                d(i, j) = std::hypot(a(i, 0) - b(j, 0), a(i, 1) - b(j, 1));
        return d;
    };
    inst.flow = dist(inst.agent_pos, inst.agent_pos);
    inst.distance = dist(inst.task_pos, inst.task_pos);
    inst.linear_cost = dist(inst.agent_pos, inst.task_pos);
    return inst;
}

inline Matrix random_plan(otqap::Rng& rng, Eigen::Index n, Eigen::Index m)
{
    Matrix p(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            p(i, j) = rng.uniform();
    return p / p.sum();
}

inline Matrix random_symmetric(otqap::Rng& rng, Eigen::Index n)
{
    Matrix pts(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
            pts(i, c) = rng.uniform(-5.0, 5.0);
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            d(i, j) = (pts.row(i) - pts.row(j)).norm();
    return d;
}

inline Matrix random_psd(otqap::Rng& rng, Eigen::Index d, bool full_rank = true)
{
    Matrix a(d, full_rank ? d : std::max<Eigen::Index>(1, d - 1));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            a(i, j) = rng.uniform(-1.0, 1.0);
    Matrix s = a * a.transpose();
    return 0.5 * (s + s.transpose());
}

}  // namespace oracle
