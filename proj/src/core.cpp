#include "otqap/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace otqap {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::InvalidInit: return "InvalidInit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::UnsupportedExponent: return "UnsupportedExponent";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonPositiveExact: return "NonPositiveExact";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::NonEmptyRequired: return "NonEmptyRequired";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

void require_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite())
        throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

// ---------------------------------------------------------------------------
// Histogram

Histogram Histogram::validate(const Vector& weights)
{
    if (weights.size() < 1)
        throw Error(ErrorCode::EmptyInput, "histogram needs at least one weight");
    if (!weights.allFinite())
        throw Error(ErrorCode::NonFinite, "histogram weights");
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0)
            throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " is negative");
    }
    const double s = weights.sum();
    if (std::abs(s - 1.0) > tol::histogram_sum)
        throw Error(ErrorCode::SumNotOne, "weights sum to " + std::to_string(s));
    return Histogram(weights);
}

Histogram Histogram::normalize(const Vector& raw)
{
    if (raw.size() < 1)
        throw Error(ErrorCode::EmptyInput, "histogram needs at least one weight");
    if (!raw.allFinite())
        throw Error(ErrorCode::NonFinite, "masses");
    if ((raw.array() < 0.0).any())
        throw Error(ErrorCode::NegativeWeight, "masses must be nonnegative");
    const double s = raw.sum();
    if (!(s > 0.0))
        throw Error(ErrorCode::AllZero, "no strictly positive mass");
    return Histogram(raw / s);
}

Histogram Histogram::uniform(Eigen::Index n)
{
    if (n < 1)
        throw Error(ErrorCode::EmptyInput, "histogram needs at least one weight");
    return Histogram(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Coupling

Coupling::Coupling(Matrix plan, Histogram row_marginal, Histogram col_marginal)
    : plan_(std::move(plan)), rows_(std::move(row_marginal)), cols_(std::move(col_marginal))
{
    if (plan_.rows() != rows_.size() || plan_.cols() != cols_.size())
        throw Error(ErrorCode::DimensionMismatch, "plan shape does not match marginals");
    require_finite(plan_, "coupling");
    if ((plan_.array() < 0.0).any())
        throw Error(ErrorCode::NegativeWeight, "coupling has negative entries");
}

Coupling Coupling::product(const Histogram& h, const Histogram& g)
{
    return Coupling(h.weights() * g.weights().transpose(), h, g);
}

MarginalError marginal_violation(const Coupling& plan)
{
    MarginalError e;
    e.row_err = (plan.plan().rowwise().sum() - plan.row_marginal().weights()).cwiseAbs().maxCoeff();
    e.col_err = (plan.plan().colwise().sum().transpose() - plan.col_marginal().weights()).cwiseAbs().maxCoeff();
    return e;
}

// ---------------------------------------------------------------------------
// Structure matrices, mm-spaces, Gaussians

SymCostMatrix::SymCostMatrix(Matrix entries) : entries_(std::move(entries))
{
    if (entries_.rows() != entries_.cols())
        throw Error(ErrorCode::NonSquare, "structure matrix must be square");
    if (entries_.rows() < 1)
        throw Error(ErrorCode::EmptyInput, "structure matrix is empty");
    require_finite(entries_, "structure matrix");
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > tol::symmetry * scale)
        throw Error(ErrorCode::NotSymmetric, "structure matrix is not symmetric");
}

SymCostMatrix SymCostMatrix::euclidean(const Matrix& points)
{
    const Eigen::Index n = points.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
        }
    }
    return SymCostMatrix(std::move(d));
}

MmSpace::MmSpace(SymCostMatrix s, Histogram m, std::optional<Matrix> f)
    : structure(std::move(s)), mass(std::move(m)), features(std::move(f))
{
    if (structure.size() != mass.size())
        throw Error(ErrorCode::DimensionMismatch, "structure and mass sizes differ");
    if (features && features->rows() != mass.size())
        throw Error(ErrorCode::DimensionMismatch, "feature rows differ from mass size");
}

GaussianMeasure::GaussianMeasure(Vector m, Matrix cov) : mean(std::move(m)), covariance(std::move(cov))
{
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
        throw Error(ErrorCode::DimensionMismatch, "covariance must be d x d with d = mean size");
    require_finite(covariance, "covariance");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol::symmetry * scale)
        throw Error(ErrorCode::NotSymmetric, "covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(covariance, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().size() > 0 && es.eigenvalues().minCoeff() < -tol::psd_eigenvalue * scale)
        throw Error(ErrorCode::NotPSD, "covariance has a negative eigenvalue");
}

// ---------------------------------------------------------------------------
// Randomness

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t SeedPolicy::mix() const
{
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

Rng::Rng(const SeedPolicy& seed)
{
    std::uint64_t s = seed.mix();
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(seed.stream_id), static_cast<std::uint32_t>(seed.stream_id >> 32)};
    engine_.seed(seq);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo)
        throw Error(ErrorCode::InvalidArgument, "empty integer range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0)
        return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body)
{
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    for (unsigned t = 0; t < used; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    for (auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
}

}  // namespace otqap
