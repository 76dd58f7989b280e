#include <algorithm>
#include <cmath>
#include <limits>

#include "otqap/gw.hpp"
#include "otqap/linear_ot.hpp"

namespace otqap {

namespace {

void require_squared_loss(const GwProblem& p)
{
    if (p.loss_exponent != 2)
        throw Error(ErrorCode::UnsupportedExponent,
                    "only the squared loss (q = 2) is supported, got q = " + std::to_string(p.loss_exponent));
}

void check_plan_shape(const GwProblem& p, const Coupling& plan)
{
    if (plan.rows() != p.source.size() || plan.cols() != p.target.size())
        throw Error(ErrorCode::DimensionMismatch, "coupling shape does not match the problem");
}

Coupling checked_init(const GwProblem& p, const std::optional<Coupling>& init)
{
    if (!init)
        return Coupling::product(p.h(), p.g());
    if (init->rows() != p.source.size() || init->cols() != p.target.size())
        throw Error(ErrorCode::InvalidInit, "initial coupling has the wrong shape");
    const double re = (init->plan().rowwise().sum() - p.h().weights()).cwiseAbs().maxCoeff();
    const double ce = (init->plan().colwise().sum().transpose() - p.g().weights()).cwiseAbs().maxCoeff();
    if (std::max(re, ce) > tol::coupling_marginal)
        throw Error(ErrorCode::InvalidInit, "initial coupling violates the problem marginals");
    return Coupling(init->plan(), p.h(), p.g());
}

// Frank-Wolfe on alpha * L(P) + (1 - alpha) <M, P>; M may be absent.
GwSolution conditional_gradient(const GwProblem& problem, const Matrix* feature_cost, double alpha,
                                Coupling start, int max_iter, double tol)
{
    require_squared_loss(problem);
    if (max_iter < 1)
        throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    const Matrix& c1 = problem.c1();
    const Matrix& c2 = problem.c2();

    auto objective = [&](const Matrix& p) {
        double f = alpha * std::max(0.0, gw_quadratic(c1, c2, p));
        if (feature_cost != nullptr)
            f += (1.0 - alpha) * feature_cost->cwiseProduct(p).sum();
        return f;
    };

    Matrix plan = start.plan();
    double f = objective(plan);
    GwSolution sol{std::move(start), f, false, 0, -1, {f}};

    for (int it = 1; it <= max_iter; ++it) {
        sol.iterations = it;
        Matrix grad = alpha * gw_tensor_gradient(c1, c2, plan);
        if (feature_cost != nullptr)
            grad += (1.0 - alpha) * *feature_cost;

        const OtResult vertex = solve_exact_ot(grad, problem.h(), problem.g());
        const Matrix dir = vertex.coupling.plan() - plan;
        const double slope = grad.cwiseProduct(dir).sum();
        const double curvature = alpha * gw_quadratic(c1, c2, dir);

        double step;
        if (curvature > 0.0)
            step = std::clamp(-slope / (2.0 * curvature), 0.0, 1.0);
        else
            step = curvature + slope < 0.0 ? 1.0 : 0.0;
        if (step <= 0.0 || slope >= 0.0) {
            sol.converged = true;
            break;
        }

        Matrix next = step >= 1.0 ? vertex.coupling.plan() : Matrix((plan + step * dir).cwiseMax(0.0));
        const double f_next = objective(next);
        if (f_next > f) {
            // Rounding-level ascent: keep the current point.
            sol.converged = true;
            break;
        }
        const double decrease = f - f_next;
        plan = std::move(next);
        f = f_next;
        sol.history.push_back(f);
        if (decrease <= tol * std::max(std::abs(f + decrease), std::numeric_limits<double>::min())) {
            sol.converged = true;
            break;
        }
    }
    sol.coupling = Coupling(std::move(plan), problem.h(), problem.g());
    sol.objective = f;
    return sol;
}

}  // namespace

GwProblem::GwProblem(MmSpace s, MmSpace t, int q) : source(std::move(s)), target(std::move(t)), loss_exponent(q)
{
    if (q < 1)
        throw Error(ErrorCode::UnsupportedExponent, "loss exponent must be >= 1");
}

void MultiInitConfig::validate() const
{
    if (trials < 0)
        throw Error(ErrorCode::InvalidArgument, "trials must be >= 0");
    if (!(delta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    if (!(jitter > 0.0))
        throw Error(ErrorCode::InvalidArgument, "jitter must be positive");
}

FgwProblem::FgwProblem(GwProblem g, Matrix m, double a) : gw(std::move(g)), feature_cost(std::move(m)), alpha(a)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
    if (!gw.source.features || !gw.target.features)
        throw Error(ErrorCode::InvalidArgument, "fused GW needs features on both spaces");
    if (feature_cost.rows() != gw.source.size() || feature_cost.cols() != gw.target.size())
        throw Error(ErrorCode::DimensionMismatch, "feature cost shape does not match the marginals");
    require_finite(feature_cost, "feature cost");
}

FgwProblem FgwProblem::from_features(GwProblem gw, double alpha, int p)
{
    if (!gw.source.features || !gw.target.features)
        throw Error(ErrorCode::InvalidArgument, "fused GW needs features on both spaces");
    Matrix m = ground_cost(*gw.source.features, *gw.target.features, p);
    return FgwProblem(std::move(gw), std::move(m), alpha);
}

double gw_loss(const GwProblem& problem, const Coupling& plan)
{
    require_squared_loss(problem);
    check_plan_shape(problem, plan);
    return std::max(0.0, gw_quadratic(problem.c1(), problem.c2(), plan.plan()));
}

Matrix gw_gradient(const GwProblem& problem, const Coupling& plan)
{
    require_squared_loss(problem);
    check_plan_shape(problem, plan);
    return gw_tensor_gradient(problem.c1(), problem.c2(), plan.plan());
}

double fgw_loss(const FgwProblem& problem, const Coupling& plan)
{
    const double structure = gw_loss(problem.gw, plan);
    return problem.alpha * structure + (1.0 - problem.alpha) * problem.feature_cost.cwiseProduct(plan.plan()).sum();
}

GwSolution solve_gw(const GwProblem& problem, const std::optional<Coupling>& init, int max_iter, double tol)
{
    return conditional_gradient(problem, nullptr, 1.0, checked_init(problem, init), max_iter, tol);
}

GwSolution solve_fgw(const FgwProblem& problem, const std::optional<Coupling>& init, int max_iter, double tol)
{
    if (!(problem.alpha >= 0.0 && problem.alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
    return conditional_gradient(problem.gw, &problem.feature_cost, problem.alpha, checked_init(problem.gw, init),
                                max_iter, tol);
}

GwSolution solve_gw_multi_init(const GwProblem& problem, const MultiInitConfig& config, int max_iter, double tol,
                               std::vector<TrialRecord>* trials_out)
{
    config.validate();
    GwSolution best = solve_gw(problem, std::nullopt, max_iter, tol);
    best.trial_of_origin = -1;
    const TrialRecord default_record{-1, best.objective, best.iterations, best.converged, false, {}};

    const auto n = problem.source.size();
    const auto m = problem.target.size();
    std::vector<std::optional<GwSolution>> results(static_cast<std::size_t>(config.trials));
    std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));

    parallel_for(results.size(), config.workers, [&](std::size_t k) {
        const int t = static_cast<int>(k) + 1;
        TrialRecord& rec = records[k];
        rec.trial = t;
        try {
            Rng rng(SeedPolicy{config.seed.master_seed, static_cast<std::uint64_t>(t)});
            Matrix raw(n, m);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < m; ++j)
                    raw(i, j) = rng.uniform() + config.jitter;
            }
            Coupling start = sinkhorn_project(raw, problem.h(), problem.g(), config.delta);
            GwSolution s = solve_gw(problem, start, max_iter, tol);
            s.trial_of_origin = t;
            rec.objective = s.objective;
            rec.iterations = s.iterations;
            rec.converged = s.converged;
            results[k] = std::move(s);
        } catch (const Error& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    });

    for (auto& r : results) {
        if (r && r->objective < best.objective)
            best = std::move(*r);
    }
    if (trials_out != nullptr) {
        records.insert(records.begin(), default_record);
        *trials_out = std::move(records);
    }
    return best;
}

GwSolution solve_entropic_gw(const GwProblem& problem, const EntropicOptions& o)
{
    require_squared_loss(problem);
    if (!(o.epsilon > 0.0))
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (o.max_outer < 1 || o.max_sinkhorn < 1)
        throw Error(ErrorCode::InvalidArgument, "iteration caps must be >= 1");
    if (!(o.tol > 0.0) || !(o.sinkhorn_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");

    const Matrix& c1 = problem.c1();
    const Matrix& c2 = problem.c2();
    Matrix plan = Coupling::product(problem.h(), problem.g()).plan();
    double f = std::max(0.0, gw_quadratic(c1, c2, plan));
    Matrix best_plan = plan;
    double best_f = f;
    std::vector<double> history{f};
    SinkhornWarmStart warm;
    bool converged = false;
    int it = 0;

    while (it < o.max_outer) {
        ++it;
        const Matrix grad = gw_tensor_gradient(c1, c2, plan);
        SinkhornResult step = sinkhorn(grad, problem.h(), problem.g(), o.epsilon, o.max_sinkhorn, o.sinkhorn_tol, &warm);
        const double change = (step.coupling.plan() - plan).cwiseAbs().maxCoeff();
        plan = step.coupling.plan();
        f = std::max(0.0, gw_quadratic(c1, c2, plan));
        history.push_back(f);
        if (f < best_f) {
            best_f = f;
            best_plan = plan;
        }
        if (change < o.tol) {
            converged = true;
            break;
        }
    }

    GwSolution sol{Coupling(converged ? plan : best_plan, problem.h(), problem.g()), converged ? f : best_f, converged,
                   it, -1, std::move(history)};
    return sol;
}

}  // namespace otqap
