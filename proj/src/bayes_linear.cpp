#include "subkalman/bayes_linear.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "subkalman/sampling.hpp"

namespace subkalman {
namespace {

void check_square(const Vector& mean, const Matrix& cov, const char* what) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ShapeError(std::string(what) + ": covariance is " + std::to_string(cov.rows()) + "x" +
                     std::to_string(cov.cols()) + ", mean has " + std::to_string(mean.size()) +
                     " entries");
  }
}

void check_row(const Vector& mean, const Vector& x) {
  if (x.size() != mean.size()) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(mean.size()));
  }
}

void check_design(const Vector& mean, const Matrix& x, const Vector& y) {
  if (x.cols() != mean.size()) throw ShapeError("design matrix column count does not match the mean");
  if (x.rows() != y.size()) throw ShapeError("design matrix rows do not match the target count");
}

Matrix invert_prior(const Matrix& cov) {
  Eigen::FullPivLU<Matrix> lu(cov);
  if (!lu.isInvertible()) throw SingularPrior("prior covariance is not invertible");
  return lu.inverse();
}

}  // namespace

void symmetrize(Matrix& m) { m = (0.5 * (m + m.transpose())).eval(); }

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

LinearStats LinearStats::zeros(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return {Vector::Zero(k), Matrix::Zero(k, k), 0.0, 0};
}

void LinearStats::add(const Vector& x, double y) {
  if (x.size() != psi.size()) throw ShapeError("feature length does not match the statistics");
  psi += y * x;
  phi.selfadjointView<Eigen::Lower>().rankUpdate(x);
  phi.triangularView<Eigen::StrictlyUpper>() = phi.transpose();
  r2 += y * y;
  ++count;
}

GaussianBelief uninformative_gaussian(std::size_t n, double precision) {
  const auto k = static_cast<Eigen::Index>(n);
  return {Vector::Zero(k), Matrix::Identity(k, k) / precision};
}

NigBelief default_nig_prior(std::size_t n, double precision, double a0, double b0) {
  const auto k = static_cast<Eigen::Index>(n);
  return {Vector::Zero(k), Matrix::Identity(k, k) / precision, a0, b0};
}

GaussianBelief batch_posterior_known_var(const GaussianBelief& prior, const Matrix& x,
                                         const Vector& y, double noise_var) {
  check_square(prior.mean, prior.cov, "batch posterior");
  check_design(prior.mean, x, y);
  if (!(noise_var > 0.0)) throw ShapeError("noise variance must be positive");
  if (x.rows() == 0) return prior;
  const Matrix lambda0 = invert_prior(prior.cov);
  const Matrix lambda = lambda0 + x.transpose() * x / noise_var;
  GaussianBelief out;
  out.cov = lambda.ldlt().solve(Matrix::Identity(lambda.rows(), lambda.cols()));
  symmetrize(out.cov);
  out.mean = out.cov * (lambda0 * prior.mean + x.transpose() * y / noise_var);
  return out;
}

GaussianBelief rls_step(const GaussianBelief& bel, const Vector& x, double y, double noise_var) {
  check_square(bel.mean, bel.cov, "rls step");
  check_row(bel.mean, x);
  const double e = y - x.dot(bel.mean);
  const Vector sx = bel.cov * x;
  const double s = x.dot(sx) + noise_var;
  const Vector k = sx / s;
  GaussianBelief out{bel.mean + k * e, bel.cov - k * k.transpose() * s};
  symmetrize(out.cov);
  return out;
}

GaussianBelief sherman_morrison_step(const GaussianBelief& bel, const Vector& x, double y,
                                     double noise_var) {
  check_square(bel.mean, bel.cov, "sherman-morrison step");
  check_row(bel.mean, x);
  const Vector v = bel.cov * x;
  const double s = noise_var + x.dot(v);
  GaussianBelief out;
  out.cov = bel.cov - v * v.transpose() / s;
  symmetrize(out.cov);
  // Sigma' (Sigma^-1 mu + x y / s2) without forming Sigma^-1.
  out.mean = bel.mean - v * (x.dot(bel.mean) / s) + out.cov * x * (y / noise_var);
  return out;
}

NigBelief nig_batch(const NigBelief& prior, const Matrix& x, const Vector& y) {
  check_square(prior.mean, prior.cov, "nig batch");
  check_design(prior.mean, x, y);
  if (x.rows() == 0) return prior;
  const Matrix lambda0 = invert_prior(prior.cov);
  const Matrix lambda = lambda0 + x.transpose() * x;
  const Vector eta = lambda0 * prior.mean + x.transpose() * y;
  NigBelief out;
  out.cov = lambda.ldlt().solve(Matrix::Identity(lambda.rows(), lambda.cols()));
  symmetrize(out.cov);
  out.mean = out.cov * eta;
  out.a = prior.a + 0.5 * static_cast<double>(x.rows());
  out.b = prior.b +
          0.5 * (y.squaredNorm() + prior.mean.dot(lambda0 * prior.mean) - out.mean.dot(lambda * out.mean));
  return out;
}

NigBelief nig_step(const NigBelief& bel, const Vector& x, double y) {
  check_row(bel.mean, x);
  Matrix row(1, x.size());
  row.row(0) = x.transpose();
  return nig_batch(bel, row, Vector::Constant(1, y));
}

VarKfBelief varkf_step(const VarKfBelief& bel, const Vector& x, double y) {
  check_square(bel.mean, bel.cov, "variance-tracking step");
  check_row(bel.mean, x);
  const double e = y - x.dot(bel.mean);
  const Vector sx = bel.cov * x;
  const double s = x.dot(sx) + 1.0;
  const Vector k = sx / s;
  VarKfBelief out;
  out.mean = bel.mean + k * e;
  out.cov = bel.cov - k * k.transpose() * s;
  symmetrize(out.cov);
  out.nu = bel.nu + 1.0;
  out.tau = (bel.nu * bel.tau + e * e / s) / out.nu;
  return out;
}

NigBelief nig_from_stats(const NigBelief& prior, const LinearStats& stats) {
  check_square(prior.mean, prior.cov, "posterior from statistics");
  if (stats.psi.size() != prior.mean.size() || stats.phi.rows() != prior.mean.size()) {
    throw ShapeError("statistics dimension does not match the prior");
  }
  if (stats.count == 0) return prior;
  const auto n = prior.mean.size();
  // Sigma = (Sigma0^-1 + Phi)^-1 = (I + Sigma0 Phi)^-1 Sigma0, valid for singular Sigma0.
  const Matrix m = Matrix::Identity(n, n) + prior.cov * stats.phi;
  const Eigen::PartialPivLU<Matrix> lu(m);
  const Vector m_inv_mu0 = lu.solve(prior.mean);
  NigBelief out;
  out.cov = lu.solve(prior.cov);
  symmetrize(out.cov);
  const Vector sigma_psi = out.cov * stats.psi;
  out.mean = m_inv_mu0 + sigma_psi;
  out.a = prior.a + 0.5 * static_cast<double>(stats.count);
  out.b = prior.b + 0.5 * (stats.r2 + prior.mean.dot(stats.phi * m_inv_mu0) -
                           2.0 * stats.psi.dot(m_inv_mu0) - stats.psi.dot(sigma_psi));
  return out;
}

NigSample sample_nig(const NigBelief& bel, Rng& rng) {
  check_square(bel.mean, bel.cov, "nig sample");
  const double s2 = sample_inverse_gamma(bel.a, bel.b, rng);
  return {s2, GaussianSampler(bel.cov).draw(bel.mean, std::sqrt(s2), rng)};
}

}  // namespace subkalman
