#include "subkalman/ekf.hpp"

#include "subkalman/bayes_linear.hpp"
#include "subkalman/kernels.hpp"

namespace subkalman {
namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void check_lin(const EkfBelief& bel, const Linearization& lin, const EkfNoise& noise) {
  noise.validate();
  if (lin.jacobian.size() != bel.mean.size()) {
    throw ShapeError("jacobian has " + std::to_string(lin.jacobian.size()) + " entries, belief has " +
                     std::to_string(bel.mean.size()));
  }
}

}  // namespace

Matrix EkfBelief::dense_cov() const {
  const auto n = mean.size();
  return std::visit(overloaded{
                        [](const FullCov& c) -> Matrix { return c.cov; },
                        [](const DiagCov& c) -> Matrix { return c.var.asDiagonal(); },
                        [n](const BlockCov& c) -> Matrix {
                          Matrix m = Matrix::Zero(n, n);
                          for (const auto& b : c.blocks) {
                            const auto s = static_cast<Eigen::Index>(b.start);
                            m.block(s, s, b.cov.rows(), b.cov.cols()) = b.cov;
                          }
                          return m;
                        },
                    },
                    cov);
}

void EkfBelief::validate() const {
  const auto n = mean.size();
  std::visit(overloaded{
                 [n](const FullCov& c) {
                   if (c.cov.rows() != n || c.cov.cols() != n) throw ShapeError("full covariance shape");
                 },
                 [n](const DiagCov& c) {
                   if (c.var.size() != n) throw ShapeError("diagonal covariance length");
                 },
                 [n](const BlockCov& c) {
                   Eigen::Index next = 0;
                   for (const auto& b : c.blocks) {
                     if (static_cast<Eigen::Index>(b.start) != next || b.cov.rows() != b.cov.cols() ||
                         b.cov.rows() == 0) {
                       throw ShapeError("blocks must be square and tile the parameters in order");
                     }
                     next += b.cov.rows();
                   }
                   if (next != n) throw ShapeError("blocks do not cover the parameters");
                 },
             },
             cov);
}

EkfBelief full_belief(Vector mean, double variance) {
  const auto n = mean.size();
  return {std::move(mean), FullCov{Matrix::Identity(n, n) * variance}};
}

EkfBelief diag_belief(Vector mean, double variance) {
  const auto n = mean.size();
  return {std::move(mean), DiagCov{Vector::Constant(n, variance)}};
}

EkfBelief block_belief(Vector mean, const std::vector<std::size_t>& sizes, double variance) {
  BlockCov blocks;
  std::size_t start = 0;
  for (auto s : sizes) {
    const auto k = static_cast<Eigen::Index>(s);
    blocks.blocks.push_back({start, Matrix::Identity(k, k) * variance});
    start += s;
  }
  EkfBelief bel{std::move(mean), std::move(blocks)};
  bel.validate();
  return bel;
}

void EkfNoise::validate() const {
  if (!(obs_var > 0.0)) throw ShapeError("observation variance must be positive");
  if (!(process_var >= 0.0)) throw ShapeError("process variance must be non-negative");
}

void ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise) {
  auto* full = std::get_if<FullCov>(&bel.cov);
  if (!full) throw ShapeError("ekf_update needs a full covariance");
  check_lin(bel, lin, noise);
  Matrix& cov = full->cov;
  const auto n = static_cast<std::size_t>(bel.mean.size());
  if (noise.process_var != 0.0) cov.diagonal().array() += noise.process_var;
  Vector v(bel.mean.size());
  // Symmetric, so the column-major storage reads the same as row-major.
  kernels::gemv(as_span(cov), n, n, as_span(lin.jacobian), as_span(v));
  const double s = lin.jacobian.dot(v) + noise.obs_var;
  const double e = y - lin.prediction;
  kernels::axpy(e / s, as_span(v), as_span(bel.mean));
  kernels::ger(-1.0 / s, as_span(v), as_span(v), as_span(cov));
  symmetrize(cov);
}

EkfBelief ekf_step(const EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise) {
  EkfBelief out = bel;
  ekf_update(out, lin, y, noise);
  return out;
}

void decoupled_ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise) {
  check_lin(bel, lin, noise);
  const double e = y - lin.prediction;
  if (auto* diag = std::get_if<DiagCov>(&bel.cov)) {
    if (diag->var.size() != bel.mean.size()) throw ShapeError("diagonal covariance length");
    Vector& var = diag->var;
    var.array() += noise.process_var;
    const Vector v = var.cwiseProduct(lin.jacobian);
    const double s = lin.jacobian.dot(v) + noise.obs_var;
    bel.mean += v * (e / s);
    var -= v.cwiseProduct(v) / s;
    var = var.cwiseMax(0.0);
    return;
  }
  auto* blocks = std::get_if<BlockCov>(&bel.cov);
  if (!blocks) throw ShapeError("decoupled_ekf_update needs a diagonal or block covariance");
  bel.validate();
  std::vector<Vector> vs;
  vs.reserve(blocks->blocks.size());
  double s = noise.obs_var;
  for (auto& b : blocks->blocks) {
    b.cov.diagonal().array() += noise.process_var;
    const auto h = lin.jacobian.segment(static_cast<Eigen::Index>(b.start), b.cov.rows());
    vs.push_back(b.cov * h);
    s += h.dot(vs.back());
  }
  for (std::size_t i = 0; i < blocks->blocks.size(); ++i) {
    auto& b = blocks->blocks[i];
    bel.mean.segment(static_cast<Eigen::Index>(b.start), b.cov.rows()) += vs[i] * (e / s);
    b.cov -= vs[i] * vs[i].transpose() / s;
    symmetrize(b.cov);
  }
}

EkfBelief decoupled_ekf_step(const EkfBelief& bel, const Linearization& lin, double y,
                             const EkfNoise& noise) {
  EkfBelief out = bel;
  decoupled_ekf_update(out, lin, y, noise);
  return out;
}

void any_ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise) {
  if (std::holds_alternative<FullCov>(bel.cov)) {
    ekf_update(bel, lin, y, noise);
  } else {
    decoupled_ekf_update(bel, lin, y, noise);
  }
}

Linearization subspace_linearize(const Vector& z, const AffineSubspace& sub,
                                 const MlpArchitecture& arch, std::span<const double> state,
                                 std::size_t action) {
  const ParamVector theta = lift(sub, as_span(z));
  auto vg = value_and_grad(arch, theta, state, action);
  return {vg.value, project_gradient(sub, as_span(vg.grad))};
}

void subspace_ekf_update(EkfBelief& bel, const AffineSubspace& sub, const MlpArchitecture& arch,
                         std::span<const double> state, std::size_t action, double y,
                         const EkfNoise& noise) {
  if (bel.dim() != sub.dim()) {
    throw ShapeError("belief dimension " + std::to_string(bel.dim()) + " does not match subspace " +
                     std::to_string(sub.dim()));
  }
  any_ekf_update(bel, subspace_linearize(bel.mean, sub, arch, state, action), y, noise);
}

EkfBelief subspace_ekf_step(const EkfBelief& bel, const AffineSubspace& sub,
                            const MlpArchitecture& arch, std::span<const double> state,
                            std::size_t action, double y, const EkfNoise& noise) {
  EkfBelief out = bel;
  subspace_ekf_update(out, sub, arch, state, action, y, noise);
  return out;
}

}  // namespace subkalman
