#include <Eigen/Eigenvalues>
#include <numeric>

#include "detail.hpp"

namespace subkalman {
namespace {

double pgd_objective(const Matrix& a, std::span<const Vector> features, std::span<const double> targets) {
  double total = 0.0;
  for (std::size_t j = 0; j < features.size(); ++j) {
    const double r = features[j].dot(a * features[j]) - targets[j];
    total += r * r;
  }
  return total;
}

}  // namespace

PgdResult pgd_psd_project(const Matrix& a0, std::span<const Vector> features,
                          std::span<const double> targets, std::size_t steps, double learning_rate) {
  if (a0.rows() != a0.cols()) throw ShapeError("PGD needs a square matrix");
  if (features.size() != targets.size()) throw ShapeError("one target per feature vector");
  for (const auto& f : features) {
    if (f.size() != a0.rows()) throw ShapeError("feature length does not match the matrix");
  }
  PgdResult out{a0, pgd_objective(a0, features, targets), 0.0};
  if (features.empty()) {
    out.objective_after = out.objective_before;
    return out;
  }
  Matrix& a = out.matrix;
  for (std::size_t step = 0; step < steps; ++step) {
    // tr(A phi phi^T) = phi^T A phi
    Matrix grad = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < features.size(); ++j) {
      const double r = features[j].dot(a * features[j]) - targets[j];
      grad.noalias() += (2.0 * r) * features[j] * features[j].transpose();
    }
    a -= learning_rate * grad;
    symmetrize(a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
    a = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    symmetrize(a);
  }
  out.objective_after = pgd_objective(a, features, targets);
  return out;
}

Lim2Agent::Lim2Agent(Lim2Config cfg) : cfg_(std::move(cfg)), sgd_rng_(mix_seed(cfg_.seed, 0x1132)) {
  detail::require_feature_net(cfg_.arch);
  if (cfg_.memory == 0) throw ShapeError("LiM2 memory must be positive");
  if (cfg_.batch_size == 0) throw ShapeError("batch size must be positive");
  if (!(cfg_.learning_rate >= 0.0) || !(cfg_.pgd_rate >= 0.0)) throw ShapeError("rates must be non-negative");
  cfg_.warmup_sgd.validate();
  feature_dim_ = cfg_.arch.hidden.back();
  theta_ = detail::starting_params(cfg_.arch, cfg_.initial_params, cfg_.seed);
  const NigBelief prior = default_nig_prior(feature_dim_, cfg_.prior.precision, cfg_.prior.a0, cfg_.prior.b0);
  priors_.assign(cfg_.arch.num_actions, prior);
  beliefs_ = priors_;
  for (std::size_t a = 0; a < cfg_.arch.num_actions; ++a) samplers_.emplace_back(prior.cov);
}

void Lim2Agent::init_belief(std::span<const Observation> warmup, Rng&) {
  if (!warmup.empty()) {
    theta_ = sgd_fit(cfg_.arch, theta_, warmup, detail::reseeded(cfg_.warmup_sgd, cfg_.seed, 0));
  }
  for (std::size_t a = 0; a < priors_.size(); ++a) priors_[a].mean = head_weights(cfg_.arch, theta_, a);
  for (const auto& obs : warmup) {
    memory_.push_back(obs);
    if (memory_.size() > cfg_.memory) memory_.pop_front();
  }
  steps_ = warmup.size();
  rebuild_beliefs();
}

void Lim2Agent::update_network_and_priors() {
  const std::vector<Observation> data(memory_.begin(), memory_.end());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), sgd_rng_);
  const double eta = cfg_.pgd_rate / static_cast<double>(steps_ + 1);
  const std::size_t arms = cfg_.arch.num_actions;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
    const std::span<const std::size_t> batch(order.data() + start, stop - start);
    std::vector<Vector> old_phi;
    old_phi.reserve(batch.size());
    for (auto j : batch) old_phi.push_back(penultimate_features(cfg_.arch, theta_, as_span(data[j].state)));
    sgd_step(cfg_.arch, theta_, data, batch, cfg_.learning_rate);
    if (cfg_.pgd_steps == 0) continue;
    std::vector<std::vector<Vector>> new_phi(arms);
    std::vector<std::vector<double>> targets(arms);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& obs = data[batch[k]];
      const Matrix& s0 = priors_[obs.action].cov;
      targets[obs.action].push_back(old_phi[k].dot(s0 * old_phi[k]));
      new_phi[obs.action].push_back(penultimate_features(cfg_.arch, theta_, as_span(obs.state)));
    }
    for (std::size_t a = 0; a < arms; ++a) {
      if (new_phi[a].empty()) continue;
      priors_[a].cov = pgd_psd_project(priors_[a].cov, new_phi[a], targets[a], cfg_.pgd_steps, eta).matrix;
    }
  }
  for (std::size_t a = 0; a < arms; ++a) priors_[a].mean = head_weights(cfg_.arch, theta_, a);
}

void Lim2Agent::rebuild_beliefs() {
  std::vector<LinearStats> stats(cfg_.arch.num_actions, LinearStats::zeros(feature_dim_));
  for (const auto& obs : memory_) {
    stats[obs.action].add(penultimate_features(cfg_.arch, theta_, as_span(obs.state)), obs.reward);
  }
  for (std::size_t a = 0; a < stats.size(); ++a) {
    beliefs_[a] = nig_from_stats(priors_[a], stats[a]);
    samplers_[a] = GaussianSampler(beliefs_[a].cov);
  }
}

std::size_t Lim2Agent::choose_action(const Step& step, Rng& rng) const {
  const Vector phi = penultimate_features(cfg_.arch, theta_, step.state);
  return detail::nig_thompson(beliefs_, samplers_, phi, rng);
}

void Lim2Agent::update_belief(const Observation& obs) {
  if (obs.action >= cfg_.arch.num_actions) throw ActionOutOfRange(std::to_string(obs.action));
  ++steps_;
  memory_.push_back(obs);
  if (memory_.size() > cfg_.memory) memory_.pop_front();
  update_network_and_priors();
  rebuild_beliefs();
}

}  // namespace subkalman
