#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace otqap {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RefConstMat = Eigen::Ref<const Matrix>;
using RefConstVec = Eigen::Ref<const Vector>;

// Fixed numerical tolerances shared by every solver.
namespace tol {
inline constexpr double histogram_sum = 1e-12;
inline constexpr double coupling_marginal = 1e-9;
inline constexpr double projection_delta = 1e-12;
inline constexpr double symmetry = 1e-12;
inline constexpr double psd_eigenvalue = 1e-12;
}  // namespace tol

enum class ErrorCode {
    NegativeWeight,
    SumNotOne,
    AllZero,
    EmptyInput,
    DimensionMismatch,
    NonSquare,
    NotSymmetric,
    NotPSD,
    NonFinite,
    NoConvergence,
    NumericalUnderflow,
    InvalidInit,
    InvalidArgument,
    AlphaOutOfRange,
    UnsupportedExponent,
    Infeasible,
    NonPositiveExact,
    GenerationFailed,
    NonEmptyRequired,
    UnknownFormat,
    ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Probability vector: nonnegative entries summing to one within tol::histogram_sum.
class Histogram {
public:
    /// Validates without renormalizing. Throws NegativeWeight / SumNotOne / EmptyInput.
    static Histogram validate(const Vector& weights);
    /// Divides by the total. Throws AllZero when nothing is positive.
    static Histogram normalize(const Vector& raw);
    static Histogram uniform(Eigen::Index n);

    const Vector& weights() const noexcept { return weights_; }
    Eigen::Index size() const noexcept { return weights_.size(); }
    double operator[](Eigen::Index i) const { return weights_[i]; }

    friend bool operator==(const Histogram& a, const Histogram& b) { return a.weights_ == b.weights_; }

private:
    explicit Histogram(Vector w) : weights_(std::move(w)) {}
    Vector weights_;
};

inline Histogram validate_histogram(const Vector& weights) { return Histogram::validate(weights); }
inline Histogram normalize_masses(const Vector& raw) { return Histogram::normalize(raw); }

/// Transport plan together with the marginals it is meant to satisfy.
/// Construction checks shape and nonnegativity only; marginal accuracy is measured
/// with marginal_violation.
class Coupling {
public:
    Coupling(Matrix plan, Histogram row_marginal, Histogram col_marginal);

    static Coupling product(const Histogram& h, const Histogram& g);

    const Matrix& plan() const noexcept { return plan_; }
    const Histogram& row_marginal() const noexcept { return rows_; }
    const Histogram& col_marginal() const noexcept { return cols_; }
    Eigen::Index rows() const noexcept { return plan_.rows(); }
    Eigen::Index cols() const noexcept { return plan_.cols(); }

private:
    Matrix plan_;
    Histogram rows_;
    Histogram cols_;
};

struct MarginalError {
    double row_err = 0.0;
    double col_err = 0.0;
    double max() const { return row_err > col_err ? row_err : col_err; }
};

MarginalError marginal_violation(const Coupling& plan);

/// Square symmetric structure matrix (intra-space dissimilarities).
class SymCostMatrix {
public:
    explicit SymCostMatrix(Matrix entries);
    /// Pairwise Euclidean distances between the rows of `points`.
    static SymCostMatrix euclidean(const Matrix& points);

    const Matrix& entries() const noexcept { return entries_; }
    Eigen::Index size() const noexcept { return entries_.rows(); }

private:
    Matrix entries_;
};

struct MmSpace {
    MmSpace(SymCostMatrix structure, Histogram mass, std::optional<Matrix> features = std::nullopt);

    SymCostMatrix structure;
    Histogram mass;
    std::optional<Matrix> features;

    Eigen::Index size() const { return mass.size(); }
};

struct GaussianMeasure {
    GaussianMeasure(Vector mean, Matrix covariance);

    Vector mean;
    Matrix covariance;
};

/// (master_seed, stream_id) fully determines a random stream.
struct SeedPolicy {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    SeedPolicy derive(std::uint64_t stream) const { return {mix(), stream}; }
    std::uint64_t mix() const;

    friend bool operator==(const SeedPolicy&, const SeedPolicy&) = default;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic random source. The engine is the standard 64-bit Mersenne twister;
/// the distribution mappings are spelled out here so streams are identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(const SeedPolicy& seed);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi], rejection sampled.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

private:
    std::mt19937_64 engine_;
};

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

void require_finite(const Matrix& m, const char* what);

}  // namespace otqap
