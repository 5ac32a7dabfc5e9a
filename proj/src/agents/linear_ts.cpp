#include "subkalman/agents.hpp"

namespace subkalman {

LinearTsAgent::LinearTsAgent(LinearTsConfig cfg) : cfg_(cfg) {
  if (cfg_.state_dim == 0 || cfg_.num_actions == 0) throw ShapeError("linear TS needs positive sizes");
  beliefs_.assign(cfg_.num_actions,
                  default_nig_prior(cfg_.state_dim, cfg_.prior.precision, cfg_.prior.a0, cfg_.prior.b0));
}

void LinearTsAgent::init_belief(std::span<const Observation> warmup, Rng&) {
  for (const auto& obs : warmup) update_belief(obs);
}

std::size_t LinearTsAgent::choose_action(const Step& step, Rng& rng) const {
  if (step.state.size() != cfg_.state_dim) throw ShapeError("state length mismatch");
  const Vector s = to_vector(step.state);
  Vector values(static_cast<Eigen::Index>(cfg_.num_actions));
  for (std::size_t a = 0; a < cfg_.num_actions; ++a) {
    values[static_cast<Eigen::Index>(a)] = sample_nig(beliefs_[a], rng).weights.dot(s);
  }
  return argmax(values);
}

void LinearTsAgent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  beliefs_[obs.action] = nig_step(beliefs_[obs.action], obs.state, obs.reward);
}

}  // namespace subkalman
