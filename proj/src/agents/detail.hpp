#pragma once

#include <algorithm>
#include <cmath>

#include "subkalman/agents.hpp"

namespace subkalman::detail {

// One draw (s2, w) from a NIG belief whose covariance root is already cached.
inline Vector draw_nig_weights(const NigBelief& bel, const GaussianSampler& sampler, Rng& rng) {
  const double s2 = sample_inverse_gamma(bel.a, std::max(bel.b, 1e-12), rng);
  return sampler.draw(bel.mean, std::sqrt(s2), rng);
}

// Per-arm Thompson draw on a shared feature vector.
inline std::size_t nig_thompson(const std::vector<NigBelief>& beliefs,
                                const std::vector<GaussianSampler>& samplers, const Vector& phi,
                                Rng& rng) {
  Vector values(static_cast<Eigen::Index>(beliefs.size()));
  for (std::size_t a = 0; a < beliefs.size(); ++a) {
    values[static_cast<Eigen::Index>(a)] = draw_nig_weights(beliefs[a], samplers[a], rng).dot(phi);
  }
  return argmax(values);
}

inline void require_feature_net(const MlpArchitecture& arch) {
  arch.validate();
  if (arch.hidden.empty()) throw NoHiddenLayer("feature agents need at least one hidden layer");
  if (arch.head != HeadMode::MultiHead) throw ShapeError("feature agents need a multi-head network");
}

inline ParamVector starting_params(const MlpArchitecture& arch, const std::optional<ParamVector>& given,
                                   std::uint64_t seed) {
  if (given) {
    if (static_cast<std::size_t>(given->size()) != param_count(arch)) {
      throw ShapeError("initial parameters have the wrong length");
    }
    return *given;
  }
  return init_params(arch, mix_seed(seed, 0x11));
}

inline SgdConfig reseeded(SgdConfig cfg, std::uint64_t seed, std::size_t round) {
  cfg.seed = mix_seed(seed, round);
  return cfg;
}

}  // namespace subkalman::detail
