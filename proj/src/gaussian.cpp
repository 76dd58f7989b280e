#include <algorithm>

#include "otqap/linear_ot.hpp"

namespace otqap {

Matrix psd_sqrt(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::NotPSD, "eigendecomposition failed");
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double w2_gaussian(const GaussianMeasure& a, const GaussianMeasure& b)
{
    if (a.mean.size() != b.mean.size())
        throw Error(ErrorCode::DimensionMismatch, "Gaussians live in different dimensions");
    // tr (A^1/2 B A^1/2)^1/2 is the nuclear norm of B^1/2 A^1/2; singular values avoid
    // square roots of eigenvalues near zero and give the same number for either order.
    const Matrix prod = psd_sqrt(b.covariance) * psd_sqrt(a.covariance);
    const double nuclear = Eigen::JacobiSVD<Matrix>(prod).singularValues().sum();
    const double bures = a.covariance.trace() + b.covariance.trace() - 2.0 * nuclear;
    return std::max(0.0, (a.mean - b.mean).squaredNorm() + bures);
}

}  // namespace otqap
