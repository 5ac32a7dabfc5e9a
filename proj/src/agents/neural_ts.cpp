#include "detail.hpp"
#include "subkalman/kernels.hpp"

namespace subkalman {

NeuralTsAgent::NeuralTsAgent(NeuralTsConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.arch.validate();
  if (cfg_.arch.head != HeadMode::OneHotBlock) throw ShapeError("NeuralTS needs the one-hot block input layout");
  if (!(cfg_.lambda > 0.0)) throw ShapeError("lambda must be positive");
  if (!(cfg_.exploration >= 0.0)) throw ShapeError("exploration scale must be non-negative");
  if (cfg_.update_period == 0) throw ShapeError("update period must be positive");
  cfg_.sgd.validate();
  const std::size_t width = cfg_.arch.hidden.empty() ? 1 : cfg_.arch.hidden.front();
  feature_scale_ = 1.0 / std::sqrt(static_cast<double>(width));
  theta_ = detail::starting_params(cfg_.arch, cfg_.initial_params, cfg_.seed);
  const auto d = theta_.size();
  precision_ = Matrix::Identity(d, d) * cfg_.lambda;
  precision_inv_ = Matrix::Identity(d, d) / cfg_.lambda;
}

Vector NeuralTsAgent::features(std::span<const double> state, std::size_t action) const {
  return grad_params(cfg_.arch, theta_, state, action) * feature_scale_;
}

double NeuralTsAgent::predictive_variance(const Vector& phi) const {
  const auto d = static_cast<std::size_t>(phi.size());
  Vector v(phi.size());
  kernels::gemv(as_span(precision_inv_), d, d, as_span(phi), as_span(v));
  return cfg_.lambda * phi.dot(v);
}

void NeuralTsAgent::add_feature(const Vector& phi) {
  const auto d = static_cast<std::size_t>(phi.size());
  kernels::ger(1.0, as_span(phi), as_span(phi), as_span(precision_));
  // Sherman-Morrison keeps the inverse current in O(D^2).
  Vector v(phi.size());
  kernels::gemv(as_span(precision_inv_), d, d, as_span(phi), as_span(v));
  kernels::ger(-1.0 / (1.0 + phi.dot(v)), as_span(v), as_span(v), as_span(precision_inv_));
  symmetrize(precision_inv_);
}

void NeuralTsAgent::init_belief(std::span<const Observation> warmup, Rng&) {
  history_.assign(warmup.begin(), warmup.end());
  if (!history_.empty()) {
    theta_ = sgd_fit(cfg_.arch, theta_, history_, detail::reseeded(cfg_.sgd, cfg_.seed, retrains_));
  }
  ++retrains_;
  for (const auto& obs : warmup) add_feature(features(as_span(obs.state), obs.action));
}

std::size_t NeuralTsAgent::choose_action(const Step& step, Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector values(static_cast<Eigen::Index>(cfg_.arch.num_actions));
  for (std::size_t a = 0; a < cfg_.arch.num_actions; ++a) {
    auto vg = value_and_grad(cfg_.arch, theta_, step.state, a);
    const Vector phi = vg.grad * feature_scale_;
    const double var = std::max(predictive_variance(phi), 0.0);
    values[static_cast<Eigen::Index>(a)] = vg.value + cfg_.exploration * std::sqrt(var) * normal(rng);
  }
  return argmax(values);
}

void NeuralTsAgent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.arch.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  ++steps_;
  history_.push_back(obs);
  add_feature(features(as_span(obs.state), obs.action));
  if (steps_ % cfg_.update_period == 0) {
    theta_ = sgd_fit(cfg_.arch, theta_, history_, detail::reseeded(cfg_.sgd, cfg_.seed, retrains_));
    ++retrains_;
  }
}

}  // namespace subkalman
