#include "detail.hpp"

namespace subkalman {

NeuralLinearAgent::NeuralLinearAgent(NeuralLinearConfig cfg) : cfg_(std::move(cfg)) {
  detail::require_feature_net(cfg_.arch);
  if (cfg_.update_period == 0) throw ShapeError("update period must be positive");
  cfg_.sgd.validate();
  feature_dim_ = cfg_.arch.hidden.back();
  theta_ = detail::starting_params(cfg_.arch, cfg_.initial_params, cfg_.seed);
  const NigBelief prior = default_nig_prior(feature_dim_, cfg_.prior.precision, cfg_.prior.a0, cfg_.prior.b0);
  priors_.assign(cfg_.arch.num_actions, prior);
  beliefs_ = priors_;
  stats_.assign(cfg_.arch.num_actions, LinearStats::zeros(feature_dim_));
  for (std::size_t a = 0; a < cfg_.arch.num_actions; ++a) samplers_.emplace_back(prior.cov);
}

void NeuralLinearAgent::init_belief(std::span<const Observation> warmup, Rng&) {
  for (const auto& obs : warmup) {
    memory_.push_back(obs);
    if (cfg_.memory_cap > 0 && memory_.size() > cfg_.memory_cap) memory_.pop_front();
  }
  retrain();
}

void NeuralLinearAgent::retrain() {
  if (!memory_.empty()) {
    const std::vector<Observation> data(memory_.begin(), memory_.end());
    theta_ = sgd_fit(cfg_.arch, theta_, data, detail::reseeded(cfg_.sgd, cfg_.seed, retrains_));
  }
  ++retrains_;
  if (cfg_.head_prior_mean) {
    for (std::size_t a = 0; a < priors_.size(); ++a) priors_[a].mean = head_weights(cfg_.arch, theta_, a);
  }
  rebuild();
}

void NeuralLinearAgent::rebuild() {
  for (auto& s : stats_) s = LinearStats::zeros(feature_dim_);
  for (const auto& obs : memory_) {
    stats_[obs.action].add(penultimate_features(cfg_.arch, theta_, as_span(obs.state)), obs.reward);
  }
  for (std::size_t a = 0; a < stats_.size(); ++a) refresh_arm(a);
}

void NeuralLinearAgent::refresh_arm(std::size_t arm) {
  beliefs_[arm] = nig_from_stats(priors_[arm], stats_[arm]);
  samplers_[arm] = GaussianSampler(beliefs_[arm].cov);
}

std::size_t NeuralLinearAgent::choose_action(const Step& step, Rng& rng) const {
  const Vector phi = penultimate_features(cfg_.arch, theta_, step.state);
  return detail::nig_thompson(beliefs_, samplers_, phi, rng);
}

void NeuralLinearAgent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.arch.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  ++steps_;
  memory_.push_back(obs);
  std::optional<Observation> dropped;
  if (cfg_.memory_cap > 0 && memory_.size() > cfg_.memory_cap) {
    dropped = std::move(memory_.front());
    memory_.pop_front();
  }
  if (steps_ % cfg_.update_period == 0) {
    retrain();
    return;
  }
  // Features only change on retraining, so a dropped example can be removed exactly.
  if (dropped) {
    LinearStats& s = stats_[dropped->action];
    const Vector phi = penultimate_features(cfg_.arch, theta_, as_span(dropped->state));
    s.psi -= dropped->reward * phi;
    s.phi -= phi * phi.transpose();
    s.r2 -= dropped->reward * dropped->reward;
    --s.count;
    if (dropped->action != obs.action) refresh_arm(dropped->action);
  }
  stats_[obs.action].add(penultimate_features(cfg_.arch, theta_, as_span(obs.state)), obs.reward);
  refresh_arm(obs.action);
}

}  // namespace subkalman
