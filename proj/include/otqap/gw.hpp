#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otqap/core.hpp"

namespace otqap {

// ---------------------------------------------------------------------------
// Squared-loss contraction kernels.
//
// For L(P) = sum_{i,j,k,l} (C1(i,j) - C2(k,l))^2 P(i,k) P(j,l) with row sums r = P 1
// and column sums c = P^T 1:
//   L(P) = r^T (C1.^2) r + c^T (C2.^2) c - 2 <C1 P C2^T, P>
// which costs O(n^2 m + n m^2) instead of O(n^2 m^2). The same expression is the
// quadratic form of the loss, so it also applies to directions P with zero sums.

/// Quadratic form of the squared GW loss evaluated at an arbitrary n x m matrix.
template <typename D1, typename D2, typename DP>
typename DP::Scalar gw_quadratic(const Eigen::MatrixBase<D1>& c1, const Eigen::MatrixBase<D2>& c2,
                                 const Eigen::MatrixBase<DP>& p)
{
    using Scalar = typename DP::Scalar;
    const VectorX<Scalar> r = p.rowwise().sum();
    const VectorX<Scalar> c = p.colwise().sum().transpose();
    const Scalar structure = r.dot(c1.cwiseAbs2() * r) + c.dot(c2.cwiseAbs2() * c);
    const MatrixX<Scalar> cross = c1 * p * c2.transpose();
    return structure - Scalar(2) * cross.cwiseProduct(p).sum();
}

/// Gradient of the squared GW loss for symmetric C1, C2:
///   2 * [ (C1.^2) r 1^T + 1 ((C2.^2) c)^T - 2 C1 P C2^T ].
template <typename D1, typename D2, typename DP>
MatrixX<typename DP::Scalar> gw_tensor_gradient(const Eigen::MatrixBase<D1>& c1, const Eigen::MatrixBase<D2>& c2,
                                                const Eigen::MatrixBase<DP>& p)
{
    using Scalar = typename DP::Scalar;
    const VectorX<Scalar> r = p.rowwise().sum();
    const VectorX<Scalar> c = p.colwise().sum().transpose();
    const VectorX<Scalar> left = c1.cwiseAbs2() * r;
    const VectorX<Scalar> right = c2.cwiseAbs2() * c;
    MatrixX<Scalar> g = Scalar(-2) * (c1 * p * c2.transpose());
    g.colwise() += left;
    g.rowwise() += right.transpose();
    return Scalar(2) * g;
}

// ---------------------------------------------------------------------------

struct GwProblem {
    GwProblem(MmSpace source, MmSpace target, int loss_exponent = 2);

    MmSpace source;
    MmSpace target;
    int loss_exponent = 2;

    const Matrix& c1() const { return source.structure.entries(); }
    const Matrix& c2() const { return target.structure.entries(); }
    const Histogram& h() const { return source.mass; }
    const Histogram& g() const { return target.mass; }
};

struct GwSolution {
    Coupling coupling;
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
    int trial_of_origin = -1;
    /// Objective after every accepted iterate, starting with the initial coupling.
    std::vector<double> history;
};

struct MultiInitConfig {
    int trials = 20;
    double delta = tol::projection_delta;
    double jitter = 1e-6;
    SeedPolicy seed{};
    unsigned workers = 1;

    void validate() const;
};

struct TrialRecord {
    int trial = 0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

struct FgwProblem {
    /// Both mm-spaces must carry features; M is their n x m dissimilarity.
    FgwProblem(GwProblem gw, Matrix feature_cost, double alpha);
    /// M(i,k) = ||a_i - b_k||^p from the spaces' features.
    static FgwProblem from_features(GwProblem gw, double alpha, int p = 1);

    GwProblem gw;
    Matrix feature_cost;
    double alpha = 0.5;
};

inline constexpr int kDefaultMaxIter = 1000;
inline constexpr double kDefaultTol = 1e-9;

double gw_loss(const GwProblem& problem, const Coupling& plan);
Matrix gw_gradient(const GwProblem& problem, const Coupling& plan);
double fgw_loss(const FgwProblem& problem, const Coupling& plan);

/// Conditional gradient with exact line search from `init` (default h (x) g).
GwSolution solve_gw(const GwProblem& problem, const std::optional<Coupling>& init = std::nullopt,
                    int max_iter = kDefaultMaxIter, double tol = kDefaultTol);

/// Default-init run followed by `config.trials` runs from projected random couplings;
/// keeps the lowest loss (earliest trial wins ties). Failed trials are recorded in
/// `trials_out` and skipped. The log starts with the default run as trial -1.
GwSolution solve_gw_multi_init(const GwProblem& problem, const MultiInitConfig& config,
                               int max_iter = kDefaultMaxIter, double tol = kDefaultTol,
                               std::vector<TrialRecord>* trials_out = nullptr);

struct EntropicOptions {
    double epsilon = 0.8;
    int max_outer = 200;
    int max_sinkhorn = 1000;
    double tol = 1e-7;
    double sinkhorn_tol = 1e-9;
};

/// Alternates the GW gradient with an entropic OT step on that gradient.
/// Reports the unregularized loss. When not converged the best iterate is returned.
GwSolution solve_entropic_gw(const GwProblem& problem, const EntropicOptions& options);

inline GwSolution solve_entropic_gw(const GwProblem& problem, double epsilon, int max_outer, int max_sinkhorn,
                                    double tol)
{
    EntropicOptions o;
    o.epsilon = epsilon;
    o.max_outer = max_outer;
    o.max_sinkhorn = max_sinkhorn;
    o.tol = tol;
    return solve_entropic_gw(problem, o);
}

/// Conditional gradient on (1 - alpha) <M, P> + alpha L(P). With alpha = 1 the iterates
/// are bitwise those of solve_gw.
GwSolution solve_fgw(const FgwProblem& problem, const std::optional<Coupling>& init = std::nullopt,
                     int max_iter = kDefaultMaxIter, double tol = kDefaultTol);

}  // namespace otqap
