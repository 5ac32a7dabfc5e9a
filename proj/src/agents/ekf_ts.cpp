#include "detail.hpp"

namespace subkalman {

EkfTsAgent::EkfTsAgent(EkfTsConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.arch.validate();
  cfg_.noise.validate();
  cfg_.sgd.validate();
  if (!(cfg_.prior_std >= 0.0)) throw ShapeError("prior standard deviation must be non-negative");
  if (uses_subspace() && cfg_.kind != SubspaceKind::Identity) {
    const std::size_t full = param_count(cfg_.arch);
    if (cfg_.dim == 0 || cfg_.dim > full) {
      throw DimensionError("subspace dimension " + std::to_string(cfg_.dim) + " must be in [1, " +
                           std::to_string(full) + "]");
    }
  }
}

std::string EkfTsAgent::name() const {
  switch (cfg_.mode) {
    case EkfMode::SubspaceFull: return "ekf_subspace_full";
    case EkfMode::SubspaceDiag: return "ekf_subspace_diag";
    case EkfMode::FullSpace: return "ekf_full";
    case EkfMode::DiagSpace: return "ekf_diag";
  }
  return "ekf";
}

bool EkfTsAgent::uses_subspace() const {
  return cfg_.mode == EkfMode::SubspaceFull || cfg_.mode == EkfMode::SubspaceDiag;
}

void EkfTsAgent::init_belief(std::span<const Observation> warmup, Rng&) {
  const ParamVector theta0 = detail::starting_params(cfg_.arch, cfg_.initial_params, cfg_.seed);
  std::vector<ParamVector> iterates{theta0};
  if (!warmup.empty()) iterates = sgd_train(cfg_.arch, theta0, warmup, detail::reseeded(cfg_.sgd, cfg_.seed, 0));
  const ParamVector& trained = iterates.back();
  const double var = cfg_.prior_std * cfg_.prior_std;
  const bool full_cov = cfg_.mode == EkfMode::SubspaceFull || cfg_.mode == EkfMode::FullSpace;

  Vector mean;
  if (uses_subspace()) {
    switch (cfg_.kind) {
      case SubspaceKind::Svd:
        subspace_ = svd_subspace(std::span<const ParamVector>(iterates), cfg_.dim, trained, cfg_.thin);
        break;
      case SubspaceKind::Random:
        subspace_ = random_subspace(static_cast<std::size_t>(trained.size()), cfg_.dim, trained,
                                    mix_seed(cfg_.seed, 0x2a4d));
        break;
      case SubspaceKind::Identity:
        subspace_ = identity_subspace(static_cast<std::size_t>(trained.size()));
        break;
    }
    // Coordinates of the trained weights; zero whenever the offset is the trained point.
    const Vector delta = trained - subspace_.offset;
    mean = project_gradient(subspace_, as_span(delta));
  } else {
    subspace_ = AffineSubspace{};
    mean = trained;
  }
  belief_ = full_cov ? full_belief(std::move(mean), var) : diag_belief(std::move(mean), var);
  for (const auto& obs : warmup) observe(obs);
}

void EkfTsAgent::observe(const Observation& obs) {
  if (uses_subspace()) {
    subspace_ekf_update(belief_, subspace_, cfg_.arch, as_span(obs.state), obs.action, obs.reward, cfg_.noise);
    return;
  }
  auto vg = value_and_grad(cfg_.arch, belief_.mean, as_span(obs.state), obs.action);
  any_ekf_update(belief_, Linearization{vg.value, std::move(vg.grad)}, obs.reward, cfg_.noise);
}

ParamVector EkfTsAgent::mean_params() const {
  return uses_subspace() ? lift(subspace_, as_span(belief_.mean)) : belief_.mean;
}

std::size_t EkfTsAgent::choose_action(const Step& step, Rng& rng) const {
  Vector draw;
  if (const auto* full = std::get_if<FullCov>(&belief_.cov)) {
    draw = GaussianSampler(full->cov).draw(belief_.mean, 1.0, rng);
  } else if (const auto* diag = std::get_if<DiagCov>(&belief_.cov)) {
    const Vector sd = diag->var.cwiseMax(0.0).cwiseSqrt();
    draw = belief_.mean + sd.cwiseProduct(standard_normal(belief_.dim(), rng));
  } else {
    draw = GaussianSampler(belief_.dense_cov()).draw(belief_.mean, 1.0, rng);
  }
  const ParamVector theta = uses_subspace() ? lift(subspace_, as_span(draw)) : draw;
  return argmax(forward_all_actions(cfg_.arch, theta, step.state));
}

void EkfTsAgent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.arch.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  observe(obs);
}

}  // namespace subkalman
