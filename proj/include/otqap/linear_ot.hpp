#pragma once

#include <vector>

#include "otqap/core.hpp"

namespace otqap {

/// Bijection source index -> target index.
struct Assignment {
    std::vector<int> perm;

    bool is_bijection() const;
    Matrix to_matrix() const;
};

struct OtResult {
    Coupling coupling;
    double objective = 0.0;
    long pivots = 0;
};

/// Exact discrete Kantorovich problem, min <C, T> over couplings of (h, g).
/// Transportation simplex: northwest-corner start, MODI potentials, cycle pivots.
/// Returns a vertex of the transportation polytope.
OtResult solve_exact_ot(const Matrix& cost, const Histogram& h, const Histogram& g);

struct LapResult {
    Assignment assignment;
    double objective = 0.0;
};

/// Minimum-cost perfect matching via shortest augmenting paths with potentials, O(n^3).
LapResult solve_lap(const Matrix& cost);

struct SinkhornResult {
    Coupling coupling;
    /// Unregularized transport cost <C, plan>.
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool log_domain = false;
    double marginal_error = 0.0;  // row error before the final feasibility rounding
};

/// Dual scalings kept between calls (in units of cost, i.e. eps * log of the scaling).
struct SinkhornWarmStart {
    Vector f;
    Vector g;
};

/// Entropic OT. Switches to log-domain updates when max|C| / epsilon > 500.
/// The final iterate is rounded onto the coupling polytope so its marginals are
/// exact up to floating point; `converged` reports whether the row error dropped
/// below `tol` before that rounding.
/// Throws NumericalUnderflow when a positive-mass row or column loses all kernel mass.
SinkhornResult sinkhorn(const Matrix& cost, const Histogram& h, const Histogram& g, double epsilon,
                        int max_iter = 10000, double tol = 1e-9, SinkhornWarmStart* warm = nullptr);

inline constexpr int kProjectionSweepCap = 10000;

/// Alternating row/column rescaling of a positive matrix until both marginal
/// errors are below `delta`. Throws NoConvergence after `max_sweeps`.
Coupling sinkhorn_project(const Matrix& raw, const Histogram& h, const Histogram& g,
                          double delta = tol::projection_delta, int max_sweeps = kProjectionSweepCap,
                          int* sweeps_out = nullptr);

/// Ground cost ||x_i - y_j||^p between point clouds (rows are points).
Matrix ground_cost(const Matrix& x, const Matrix& y, int p);

/// W_p^p between two discrete measures, via the exact solver.
double wasserstein_pp(const Matrix& x, const Histogram& h, const Matrix& y, const Histogram& g, int p);

/// PSD square root via symmetric eigendecomposition; eigenvalues clamped at zero.
Matrix psd_sqrt(const Matrix& a);

/// Squared 2-Wasserstein distance between Gaussians (mean shift + squared Bures term).
double w2_gaussian(const GaussianMeasure& a, const GaussianMeasure& b);

}  // namespace otqap
