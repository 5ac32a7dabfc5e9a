#pragma once

// ReLU multilayer perceptrons used as reward models f(s, a; theta).
//
// Parameters live in one flat vector (ParamVector). Layout is layer-major:
// for each layer l, the weight matrix W_l (fan_out x fan_in, row-major)
// followed by its bias b_l. The last layer is linear.
//
// Three ways of feeding the action to the network:
//   MultiHead    input s, one output per action; f = output[a]
//   Concat       input [s, onehot(a)], single output
//   OneHotBlock  input has N_a blocks of width |s|; s is copied into block a,
//                single output. With no hidden layers this is exactly the
//                per-arm linear model w_a^T s.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "subkalman/common.hpp"

namespace subkalman {

enum class HeadMode { MultiHead, Concat, OneHotBlock };

struct MlpArchitecture {
  std::size_t state_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t num_actions = 1;
  HeadMode head = HeadMode::MultiHead;

  std::size_t input_width() const;
  std::size_t output_width() const;
  // Throws ShapeError on zero widths.
  void validate() const;
};

using ParamVector = Vector;

struct Observation {
  Vector state;
  std::size_t action = 0;
  double reward = 0.0;
};

struct LayerShape {
  std::size_t fan_in;
  std::size_t fan_out;
  std::size_t weight_offset;
  std::size_t bias_offset;
};

std::vector<LayerShape> layer_shapes(const MlpArchitecture& arch);
std::size_t param_count(const MlpArchitecture& arch);

// Glorot-uniform weights, zero biases. Deterministic in (arch, seed).
ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed);

Vector encode_input(std::span<const double> state, std::size_t action, const MlpArchitecture& arch);

double forward(const MlpArchitecture& arch, const ParamVector& theta, std::span<const double> state,
               std::size_t action);
Vector forward_all_actions(const MlpArchitecture& arch, const ParamVector& theta,
                           std::span<const double> state);

// d forward / d theta, same layout as ParamVector.
Vector grad_params(const MlpArchitecture& arch, const ParamVector& theta,
                   std::span<const double> state, std::size_t action);

// Forward value and gradient from one pass.
struct ValueAndGrad {
  double value;
  Vector grad;
};
ValueAndGrad value_and_grad(const MlpArchitecture& arch, const ParamVector& theta,
                            std::span<const double> state, std::size_t action);

// Last hidden layer activations. MultiHead with at least one hidden layer only.
Vector penultimate_features(const MlpArchitecture& arch, const ParamVector& theta,
                            std::span<const double> state);

// Head weight row w_a and bias of a MultiHead network (f = w_a . phi + b_a).
Vector head_weights(const MlpArchitecture& arch, const ParamVector& theta, std::size_t action);
double head_bias(const MlpArchitecture& arch, const ParamVector& theta, std::size_t action);

struct SgdConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

// Minibatch SGD on the mean squared error of the chosen-action prediction.
// Returns theta0 followed by the parameters after every minibatch step.
std::vector<ParamVector> sgd_train(const MlpArchitecture& arch, const ParamVector& theta0,
                                   std::span<const Observation> data, const SgdConfig& cfg);

// Same trajectory as sgd_train, keeping only the final iterate.
ParamVector sgd_fit(const MlpArchitecture& arch, const ParamVector& theta0,
                    std::span<const Observation> data, const SgdConfig& cfg);

// One SGD step on a single minibatch (the indices into data), in place.
void sgd_step(const MlpArchitecture& arch, ParamVector& theta, std::span<const Observation> data,
              std::span<const std::size_t> batch, double learning_rate);

double mean_squared_error(const MlpArchitecture& arch, const ParamVector& theta,
                          std::span<const Observation> data);

// "SKPV" | version u32 | length u64 | length x f64, all little-endian.
void write_params(std::ostream& out, const ParamVector& theta);
ParamVector read_params(std::istream& in);

}  // namespace subkalman
