#include "detail.hpp"
#include "subkalman/environments.hpp"

namespace subkalman {

NeuralGreedyAgent::NeuralGreedyAgent(NeuralGreedyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.arch.validate();
  if (cfg_.update_period == 0) throw ShapeError("update period must be positive");
  cfg_.sgd.validate();
  theta_ = detail::starting_params(cfg_.arch, cfg_.initial_params, cfg_.seed);
}

void NeuralGreedyAgent::init_belief(std::span<const Observation> warmup, Rng&) {
  history_.assign(warmup.begin(), warmup.end());
  if (!history_.empty()) {
    theta_ = sgd_fit(cfg_.arch, theta_, history_, detail::reseeded(cfg_.sgd, cfg_.seed, retrains_));
  }
  ++retrains_;
}

std::size_t NeuralGreedyAgent::choose_action(const Step& step, Rng&) const {
  return argmax(forward_all_actions(cfg_.arch, theta_, step.state));
}

void NeuralGreedyAgent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.arch.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  ++steps_;
  history_.push_back(obs);
  if (steps_ % cfg_.update_period == 0) {
    theta_ = sgd_fit(cfg_.arch, theta_, history_, detail::reseeded(cfg_.sgd, cfg_.seed, retrains_));
    ++retrains_;
  }
}

RandomAgent::RandomAgent(std::size_t num_actions) : num_actions_(num_actions) {
  if (num_actions == 0) throw ShapeError("need at least one action");
}

std::size_t RandomAgent::choose_action(const Step&, Rng& rng) const {
  return std::uniform_int_distribution<std::size_t>(0, num_actions_ - 1)(rng);
}

void RandomAgent::update_belief(const Observation& obs) {
  if (obs.action >= num_actions_) throw ActionOutOfRange(std::to_string(obs.action));
}

OracleAgent::OracleAgent(std::shared_ptr<const BanditEnv> env) : env_(std::move(env)) {
  if (!env_) throw ShapeError("oracle needs an environment");
}

std::size_t OracleAgent::num_actions() const { return env_->num_actions(); }

std::size_t OracleAgent::choose_action(const Step& step, Rng&) const {
  const auto best = env_->optimal_action(step.t);
  if (!best) throw MissingOracle(env_->name() + " does not expose its best arm");
  return *best;
}

void OracleAgent::update_belief(const Observation& obs) {
  if (obs.action >= num_actions()) throw ActionOutOfRange(std::to_string(obs.action));
}

}  // namespace subkalman
