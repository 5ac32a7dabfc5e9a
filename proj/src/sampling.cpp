#include "subkalman/sampling.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace subkalman {

Vector standard_normal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector eps(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = normal(rng);
  return eps;
}

GaussianSampler::GaussianSampler(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) {
    root_ = llt.matrixL();
    triangular_ = true;
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  root_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector GaussianSampler::draw(const Vector& mean, double scale, Rng& rng) const {
  const Vector eps = standard_normal(static_cast<std::size_t>(root_.cols()), rng);
  Vector step(eps.size());
  if (triangular_) {
    step.noalias() = root_.triangularView<Eigen::Lower>() * eps;
  } else {
    step.noalias() = root_ * eps;
  }
  return mean + scale * step;
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ShapeError("covariance shape does not match the mean");
  }
  return GaussianSampler(cov).draw(mean, 1.0, rng);
}

double sample_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return gamma(rng);
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  return 1.0 / sample_gamma(shape, scale, rng);
}

}  // namespace subkalman
