#pragma once

// Bandit policies. Every agent follows the same protocol: init_belief on the
// round-robin warmup data, then choose_action / update_belief once per step.
// choose_action never mutates the belief; all randomness comes from the
// caller's generator, except SGD, which uses seeds derived from the config.

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subkalman/bayes_linear.hpp"
#include "subkalman/common.hpp"
#include "subkalman/ekf.hpp"
#include "subkalman/mlp.hpp"
#include "subkalman/sampling.hpp"
#include "subkalman/subspace.hpp"

namespace subkalman {

struct Step {
  std::size_t t = 0;
  std::span<const double> state;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual void init_belief(std::span<const Observation> warmup, Rng& rng) = 0;
  virtual std::size_t choose_action(const Step& step, Rng& rng) const = 0;
  virtual void update_belief(const Observation& obs) = 0;
};

// Index of the largest entry; ties and NaNs resolve to the lowest index.
std::size_t argmax(std::span<const double> values);
std::size_t argmax(const Vector& values);

// argmax_a means[a] + alpha * stds[a]
std::size_t ucb_select(const Vector& means, const Vector& stds, double alpha);

// Draws one parameter sample and acts greedily with respect to it.
template <class Draw, class Predict>
std::size_t ts_select(Draw&& draw_params, Predict&& predict, std::size_t num_actions, Rng& rng) {
  const auto params = draw_params(rng);
  Vector values(static_cast<Eigen::Index>(num_actions));
  for (std::size_t a = 0; a < num_actions; ++a) values[static_cast<Eigen::Index>(a)] = predict(params, a);
  return argmax(values);
}

// ---------------------------------------------------------------------------

struct NigPrior {
  double precision = kDefaultPriorPrecision;
  double a0 = kDefaultNigA;
  double b0 = kDefaultNigB;
};

struct LinearTsConfig {
  std::size_t state_dim = 1;
  std::size_t num_actions = 2;
  NigPrior prior;
};

// Per-arm Normal-Inverse-Gamma regression on the raw state.
class LinearTsAgent final : public Agent {
 public:
  explicit LinearTsAgent(LinearTsConfig cfg);
  std::string name() const override { return "linear_ts"; }
  std::size_t num_actions() const override { return cfg_.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  const std::vector<NigBelief>& beliefs() const { return beliefs_; }

 private:
  LinearTsConfig cfg_;
  std::vector<NigBelief> beliefs_;
};

// ---------------------------------------------------------------------------

struct NeuralLinearConfig {
  MlpArchitecture arch;
  std::size_t update_period = 100;  // SGD every T_u steps
  std::size_t memory_cap = 0;       // 0 keeps everything
  SgdConfig sgd;
  NigPrior prior{0.25, kDefaultNigA, kDefaultNigB};
  // Centre each arm's prior on the trained head weights instead of zero.
  bool head_prior_mean = false;
  std::uint64_t seed = 0;
  std::optional<ParamVector> initial_params;
};

// Bayesian linear regression on the penultimate features of a point-estimated network.
class NeuralLinearAgent final : public Agent {
 public:
  explicit NeuralLinearAgent(NeuralLinearConfig cfg);
  std::string name() const override { return "neural_linear"; }
  std::size_t num_actions() const override { return cfg_.arch.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  const ParamVector& params() const { return theta_; }
  const std::vector<NigBelief>& beliefs() const { return beliefs_; }
  const std::vector<LinearStats>& stats() const { return stats_; }
  std::size_t memory_size() const { return memory_.size(); }
  std::size_t retrain_count() const { return retrains_; }
  // Recomputes every feature and statistic from the memory, then every belief.
  void rebuild();

 private:
  void refresh_arm(std::size_t arm);
  void retrain();

  NeuralLinearConfig cfg_;
  std::size_t feature_dim_ = 0;
  ParamVector theta_;
  std::vector<NigBelief> priors_;
  std::deque<Observation> memory_;
  std::vector<LinearStats> stats_;
  std::vector<NigBelief> beliefs_;
  std::vector<GaussianSampler> samplers_;
  std::size_t steps_ = 0;
  std::size_t retrains_ = 0;
};

// ---------------------------------------------------------------------------

struct PgdResult {
  Matrix matrix;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

// Minimises sum_j (phi_j^T A phi_j - s2_j)^2 over PSD A by projected gradient
// descent, zeroing negative eigenvalues after every step.
PgdResult pgd_psd_project(const Matrix& a0, std::span<const Vector> features,
                          std::span<const double> targets, std::size_t steps, double learning_rate);

struct Lim2Config {
  MlpArchitecture arch;
  std::size_t memory = 256;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t pgd_steps = 1;
  double pgd_rate = 0.01;  // eta_t = pgd_rate / (t + 1)
  SgdConfig warmup_sgd;
  NigPrior prior{0.25, kDefaultNigA, kDefaultNigB};
  std::uint64_t seed = 0;
  std::optional<ParamVector> initial_params;
};

// Limited-memory neural-linear with likelihood-matched prior transfer.
class Lim2Agent final : public Agent {
 public:
  explicit Lim2Agent(Lim2Config cfg);
  std::string name() const override { return "lim2"; }
  std::size_t num_actions() const override { return cfg_.arch.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  const ParamVector& params() const { return theta_; }
  const std::vector<NigBelief>& priors() const { return priors_; }
  const std::vector<NigBelief>& beliefs() const { return beliefs_; }
  std::size_t memory_size() const { return memory_.size(); }

 private:
  void update_network_and_priors();
  void rebuild_beliefs();

  Lim2Config cfg_;
  std::size_t feature_dim_ = 0;
  ParamVector theta_;
  std::deque<Observation> memory_;
  std::vector<NigBelief> priors_;
  std::vector<NigBelief> beliefs_;
  std::vector<GaussianSampler> samplers_;
  std::size_t steps_ = 0;
  Rng sgd_rng_;
};

// ---------------------------------------------------------------------------

struct NeuralTsConfig {
  MlpArchitecture arch;  // OneHotBlock
  double lambda = 1.0;
  double exploration = 1.0;  // nu
  std::size_t update_period = 100;
  SgdConfig sgd;
  std::uint64_t seed = 0;
  std::optional<ParamVector> initial_params;
};

// Thompson sampling with scaled gradient features phi = grad f / sqrt(N_h).
class NeuralTsAgent final : public Agent {
 public:
  explicit NeuralTsAgent(NeuralTsConfig cfg);
  std::string name() const override { return "neural_ts"; }
  std::size_t num_actions() const override { return cfg_.arch.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  Vector features(std::span<const double> state, std::size_t action) const;
  // Predictive variance lambda phi^T B^-1 phi before the exploration scale.
  double predictive_variance(const Vector& phi) const;
  const Matrix& precision() const { return precision_; }
  const Matrix& precision_inverse() const { return precision_inv_; }
  const ParamVector& params() const { return theta_; }

 private:
  void add_feature(const Vector& phi);

  NeuralTsConfig cfg_;
  double feature_scale_ = 1.0;
  ParamVector theta_;
  Matrix precision_;
  Matrix precision_inv_;
  std::vector<Observation> history_;
  std::size_t steps_ = 0;
  std::size_t retrains_ = 0;
};

// ---------------------------------------------------------------------------

enum class EkfMode { SubspaceFull, SubspaceDiag, FullSpace, DiagSpace };

struct EkfTsConfig {
  MlpArchitecture arch;
  EkfMode mode = EkfMode::SubspaceFull;
  SubspaceKind kind = SubspaceKind::Svd;
  std::size_t dim = 200;
  std::size_t thin = 1;
  double prior_std = 1.0;  // sigma_0
  EkfNoise noise;
  SgdConfig sgd{0.05, 50, 16, 0};
  std::uint64_t seed = 0;
  std::optional<ParamVector> initial_params;
};

// Thompson sampling over an EKF posterior, either on subspace coordinates z or
// on all network weights.
class EkfTsAgent final : public Agent {
 public:
  explicit EkfTsAgent(EkfTsConfig cfg);
  std::string name() const override;
  std::size_t num_actions() const override { return cfg_.arch.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  bool uses_subspace() const;
  const EkfBelief& belief() const { return belief_; }
  const AffineSubspace& subspace() const { return subspace_; }
  // Weights at the posterior mean.
  ParamVector mean_params() const;

 private:
  void observe(const Observation& obs);

  EkfTsConfig cfg_;
  AffineSubspace subspace_;
  EkfBelief belief_;
};

// ---------------------------------------------------------------------------

struct NeuralGreedyConfig {
  MlpArchitecture arch;
  std::size_t update_period = 100;
  SgdConfig sgd;
  std::uint64_t seed = 0;
  std::optional<ParamVector> initial_params;
};

class NeuralGreedyAgent final : public Agent {
 public:
  explicit NeuralGreedyAgent(NeuralGreedyConfig cfg);
  std::string name() const override { return "neural_greedy"; }
  std::size_t num_actions() const override { return cfg_.arch.num_actions; }
  void init_belief(std::span<const Observation> warmup, Rng& rng) override;
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

  const ParamVector& params() const { return theta_; }

 private:
  NeuralGreedyConfig cfg_;
  ParamVector theta_;
  std::vector<Observation> history_;
  std::size_t steps_ = 0;
  std::size_t retrains_ = 0;
};

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::size_t num_actions);
  std::string name() const override { return "random"; }
  std::size_t num_actions() const override { return num_actions_; }
  void init_belief(std::span<const Observation>, Rng&) override {}
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

 private:
  std::size_t num_actions_;
};

class BanditEnv;

// Knows the environment and always plays its best arm.
class OracleAgent final : public Agent {
 public:
  explicit OracleAgent(std::shared_ptr<const BanditEnv> env);
  std::string name() const override { return "oracle"; }
  std::size_t num_actions() const override;
  void init_belief(std::span<const Observation>, Rng&) override {}
  std::size_t choose_action(const Step& step, Rng& rng) const override;
  void update_belief(const Observation& obs) override;

 private:
  std::shared_ptr<const BanditEnv> env_;
};

}  // namespace subkalman
