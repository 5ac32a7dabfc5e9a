#pragma once

// Bandit environments. Time steps are 0-based; every state and reward is a
// deterministic function of (environment seed, t, action), so runs replay exactly.

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subkalman/common.hpp"
#include "subkalman/mlp.hpp"

namespace subkalman {

class BanditEnv {
 public:
  virtual ~BanditEnv() = default;
  virtual std::string name() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::size_t state_dim() const = 0;
  // Longest run the environment supports.
  virtual std::size_t horizon() const = 0;
  virtual Vector state(std::size_t t) const = 0;
  virtual double reward(std::size_t t, std::size_t action) const = 0;
  // Noise-free best achievable reward at step t, when known.
  virtual std::optional<double> optimal_reward(std::size_t t) const = 0;
  virtual std::optional<std::size_t> optimal_action(std::size_t t) const = 0;
};

using EnvPtr = std::shared_ptr<const BanditEnv>;

// [0, 1, ..., N_a - 1] repeated N_w times.
std::vector<std::size_t> warmup_schedule(std::size_t num_actions, std::size_t pulls_per_arm);

// ---------------------------------------------------------------------------

struct TabularDataset {
  Matrix features;                // rows x N_s
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;    // labels lie in [0, num_classes)

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
};

// Header row, numeric feature columns, final integer column named `label`.
// num_classes is 1 + the largest label.
TabularDataset read_csv_dataset(std::istream& in, const std::string& source = "<stream>");
TabularDataset load_csv_dataset(const std::string& path);
void write_csv_dataset(std::ostream& out, const TabularDataset& data);

// Reward 1 for the correct label, else 0. Rows are visited in a seeded random order.
class ClassificationEnv final : public BanditEnv {
 public:
  // num_actions = 0 uses the dataset's class count. Throws LabelOutOfRange.
  ClassificationEnv(std::shared_ptr<const TabularDataset> data, std::uint64_t seed,
                    bool shuffle = true, std::size_t num_actions = 0);
  std::string name() const override { return "classification"; }
  std::size_t num_actions() const override { return num_actions_; }
  std::size_t state_dim() const override { return data_->cols(); }
  std::size_t horizon() const override { return data_->rows(); }
  Vector state(std::size_t t) const override;
  double reward(std::size_t t, std::size_t action) const override;
  std::optional<double> optimal_reward(std::size_t) const override { return 1.0; }
  std::optional<std::size_t> optimal_action(std::size_t t) const override;

  std::size_t label(std::size_t t) const;

 private:
  std::size_t row(std::size_t t) const;

  std::shared_ptr<const TabularDataset> data_;
  std::vector<std::size_t> order_;
  std::size_t num_actions_;
};

// ---------------------------------------------------------------------------

// Per-arm weights w_a ~ N(0, I); s_t ~ N(0, I); y = w_a . s + N(0, noise_std^2).
class SyntheticLinearEnv final : public BanditEnv {
 public:
  SyntheticLinearEnv(std::size_t state_dim, std::size_t num_actions, double noise_std,
                     std::uint64_t seed);
  std::string name() const override { return "synthetic_linear"; }
  std::size_t num_actions() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t state_dim() const override { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t horizon() const override { return std::numeric_limits<std::size_t>::max(); }
  Vector state(std::size_t t) const override;
  double reward(std::size_t t, std::size_t action) const override;
  std::optional<double> optimal_reward(std::size_t t) const override;
  std::optional<std::size_t> optimal_action(std::size_t t) const override;

  double mean_reward(std::size_t t, std::size_t action) const;
  const Matrix& weights() const { return weights_; }

 private:
  Matrix weights_;  // N_a x N_s
  double noise_std_;
  std::uint64_t seed_;
};

// Mean reward given by a random teacher network; y = f(s, a) + N(0, noise_std^2).
class SyntheticNonlinearEnv final : public BanditEnv {
 public:
  SyntheticNonlinearEnv(std::size_t state_dim, std::size_t num_actions,
                        std::vector<std::size_t> teacher_hidden, double noise_std,
                        std::uint64_t seed);
  std::string name() const override { return "synthetic_nonlinear"; }
  std::size_t num_actions() const override { return arch_.num_actions; }
  std::size_t state_dim() const override { return arch_.state_dim; }
  std::size_t horizon() const override { return std::numeric_limits<std::size_t>::max(); }
  Vector state(std::size_t t) const override;
  double reward(std::size_t t, std::size_t action) const override;
  std::optional<double> optimal_reward(std::size_t t) const override;
  std::optional<std::size_t> optimal_action(std::size_t t) const override;

  double mean_reward(std::size_t t, std::size_t action) const;

 private:
  MlpArchitecture arch_;
  ParamVector teacher_;
  double scale_ = 1.0;
  double noise_std_;
  std::uint64_t seed_;
};

// Gaussian inputs labelled by the argmax of a random teacher network.
TabularDataset synthetic_classification_dataset(std::size_t rows, std::size_t state_dim,
                                                std::size_t num_classes,
                                                std::vector<std::size_t> teacher_hidden,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------

struct Rating {
  std::size_t user;  // 1-based ids as in the file
  std::size_t item;
  double rating;
};

// Tab-separated `user item rating timestamp` lines. Throws ParseError with the line number.
std::vector<Rating> read_movielens(std::istream& in, const std::string& source = "<stream>");
std::vector<Rating> load_movielens(const std::string& path);

struct MovieLensSim {
  Matrix ratings;         // users x num_movies, zeros where missing
  Matrix user_factors;    // U_K, users x K
  Vector singular_values; // K
  Matrix item_factors;    // V_K, num_movies x K
  Matrix reconstruction;  // U_K S_K V_K^T
  Matrix contexts;        // U_K S_K

  std::size_t users() const { return static_cast<std::size_t>(ratings.rows()); }
  std::size_t movies() const { return static_cast<std::size_t>(ratings.cols()); }
  double reconstruction_error() const;  // relative Frobenius
};

// Keeps items 1..num_movies. Throws RankError when K exceeds min(users, num_movies).
MovieLensSim build_movielens(std::span<const Rating> ratings, std::size_t num_movies = 20,
                             std::size_t rank = 20);

// Each step draws a user uniformly; reward for arm j is the reconstructed rating.
class MovieLensEnv final : public BanditEnv {
 public:
  MovieLensEnv(std::shared_ptr<const MovieLensSim> sim, std::uint64_t seed);
  std::string name() const override { return "movielens"; }
  std::size_t num_actions() const override { return sim_->movies(); }
  std::size_t state_dim() const override { return static_cast<std::size_t>(sim_->contexts.cols()); }
  std::size_t horizon() const override { return std::numeric_limits<std::size_t>::max(); }
  Vector state(std::size_t t) const override;
  double reward(std::size_t t, std::size_t action) const override;
  std::optional<double> optimal_reward(std::size_t t) const override;
  std::optional<std::size_t> optimal_action(std::size_t t) const override;

  std::size_t user(std::size_t t) const;

 private:
  std::shared_ptr<const MovieLensSim> sim_;
  std::uint64_t seed_;
};

}  // namespace subkalman
