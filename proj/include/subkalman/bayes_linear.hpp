#pragma once

// Conjugate Bayesian linear regression.
//
// Known noise variance sigma^2: batch posterior, recursive least squares and
// the Sherman-Morrison rank-one form. Unknown variance: Normal-Inverse-Gamma
// batch and incremental updates, and the inversion-free variance-tracking
// Kalman recursion. All updates return symmetrized covariances.

#include <utility>

#include "subkalman/common.hpp"

namespace subkalman {

struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

// w | s2 ~ N(mean, s2 * cov), s2 ~ IG(a, b)
struct NigBelief {
  Vector mean;
  Matrix cov;
  double a = 1.0;
  double b = 1.0;
};

// w | V ~ N(mean, V * cov), 1/V ~ Ga(nu/2, nu*tau/2)
struct VarKfBelief {
  Vector mean;
  Matrix cov;
  double nu = 1.0;
  double tau = 1.0;
};

// Sufficient statistics of one arm's data: sum phi y, sum phi phi^T, sum y^2, count.
struct LinearStats {
  Vector psi;
  Matrix phi;
  double r2 = 0.0;
  std::size_t count = 0;

  static LinearStats zeros(std::size_t n);
  void add(const Vector& x, double y);
};

// Default uninformative precision (Sigma_0 = I / epsilon).
inline constexpr double kDefaultPriorPrecision = 1e-6;
inline constexpr double kDefaultNigA = 6.0;
inline constexpr double kDefaultNigB = 6.0;

GaussianBelief uninformative_gaussian(std::size_t n, double precision = kDefaultPriorPrecision);
NigBelief default_nig_prior(std::size_t n, double precision = kDefaultPriorPrecision,
                            double a0 = kDefaultNigA, double b0 = kDefaultNigB);

GaussianBelief batch_posterior_known_var(const GaussianBelief& prior, const Matrix& x,
                                         const Vector& y, double noise_var);
GaussianBelief rls_step(const GaussianBelief& bel, const Vector& x, double y, double noise_var);
GaussianBelief sherman_morrison_step(const GaussianBelief& bel, const Vector& x, double y,
                                     double noise_var);

NigBelief nig_batch(const NigBelief& prior, const Matrix& x, const Vector& y);
NigBelief nig_step(const NigBelief& bel, const Vector& x, double y);
VarKfBelief varkf_step(const VarKfBelief& bel, const Vector& x, double y);

// Posterior from a prior and sufficient statistics, written so that a singular
// prior covariance is allowed. Equal to nig_batch when the prior is invertible.
NigBelief nig_from_stats(const NigBelief& prior, const LinearStats& stats);

struct NigSample {
  double noise_var;
  Vector weights;
};
NigSample sample_nig(const NigBelief& bel, Rng& rng);

// (S + S^T) / 2 in place.
void symmetrize(Matrix& m);
double min_eigenvalue(const Matrix& m);

}  // namespace subkalman
