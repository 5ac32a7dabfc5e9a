#pragma once

#include "subkalman/common.hpp"

namespace subkalman {

Vector standard_normal(std::size_t n, Rng& rng);

// Draws mean + L eps with cov = L L^T. Falls back to an eigendecomposition
// (negative eigenvalues clipped to zero) when cov is only semidefinite.
Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng);

// Precomputed square root for repeated draws from the same covariance.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& cov);
  Vector draw(const Vector& mean, double scale, Rng& rng) const;

 private:
  Matrix root_;
  bool triangular_ = false;
};

// Gamma(shape, rate) and InverseGamma(shape, scale) draws.
double sample_gamma(double shape, double rate, Rng& rng);
double sample_inverse_gamma(double shape, double scale, Rng& rng);

}  // namespace subkalman
