#pragma once

// Extended Kalman filtering of static parameters observed through a scalar
// nonlinear function: y = h(mu) + noise, identity dynamics plus q I process noise.

#include <variant>
#include <vector>

#include "subkalman/common.hpp"
#include "subkalman/mlp.hpp"
#include "subkalman/subspace.hpp"

namespace subkalman {

struct FullCov {
  Matrix cov;
};
struct DiagCov {
  Vector var;
};
struct CovBlock {
  std::size_t start = 0;
  Matrix cov;
};
struct BlockCov {
  std::vector<CovBlock> blocks;
};

struct EkfBelief {
  Vector mean;
  std::variant<FullCov, DiagCov, BlockCov> cov;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  // Dense covariance, whatever the storage.
  Matrix dense_cov() const;
  // Throws ShapeError if the covariance storage does not match the mean.
  void validate() const;
};

EkfBelief full_belief(Vector mean, double variance);
EkfBelief diag_belief(Vector mean, double variance);
// Blocks of the given sizes covering [0, mean.size()) in order.
EkfBelief block_belief(Vector mean, const std::vector<std::size_t>& sizes, double variance);

struct EkfNoise {
  double obs_var = 0.75 * 0.75;
  double process_var = 1e-8;

  void validate() const;
};

// Value of h at the predicted mean and its gradient there.
struct Linearization {
  double prediction;
  Vector jacobian;
};

// Full-covariance update. Throws ShapeError unless the belief holds FullCov.
void ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise);
EkfBelief ekf_step(const EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise);

// Decoupled update for DiagCov and BlockCov beliefs.
void decoupled_ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise);
EkfBelief decoupled_ekf_step(const EkfBelief& bel, const Linearization& lin, double y,
                             const EkfNoise& noise);

// Dispatches on the covariance storage.
void any_ekf_update(EkfBelief& bel, const Linearization& lin, double y, const EkfNoise& noise);

// Network output and its Jacobian with respect to the subspace coordinates at z = mean.
Linearization subspace_linearize(const Vector& z, const AffineSubspace& sub,
                                 const MlpArchitecture& arch, std::span<const double> state,
                                 std::size_t action);

void subspace_ekf_update(EkfBelief& bel, const AffineSubspace& sub, const MlpArchitecture& arch,
                         std::span<const double> state, std::size_t action, double y,
                         const EkfNoise& noise);
EkfBelief subspace_ekf_step(const EkfBelief& bel, const AffineSubspace& sub,
                            const MlpArchitecture& arch, std::span<const double> state,
                            std::size_t action, double y, const EkfNoise& noise);

}  // namespace subkalman
