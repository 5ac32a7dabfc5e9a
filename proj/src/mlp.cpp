#include "subkalman/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subkalman/kernels.hpp"

namespace subkalman {
namespace {

// Forward pass state kept for backpropagation.
struct Pass {
  std::vector<Vector> acts;  // acts[0] = network input, acts[l] = output of layer l
  double value = 0.0;
};

std::span<const double> slice(const ParamVector& theta, std::size_t offset, std::size_t n) {
  return {theta.data() + offset, n};
}

void check_theta(const MlpArchitecture& arch, const ParamVector& theta) {
  const auto d = param_count(arch);
  if (static_cast<std::size_t>(theta.size()) != d) {
    throw ShapeError("parameter vector has " + std::to_string(theta.size()) + " entries, expected " +
                     std::to_string(d));
  }
}

void check_state(const MlpArchitecture& arch, std::span<const double> state) {
  if (state.size() != arch.state_dim) {
    throw ShapeError("state has " + std::to_string(state.size()) + " entries, expected " +
                     std::to_string(arch.state_dim));
  }
}

void check_action(const MlpArchitecture& arch, std::size_t action) {
  if (action >= arch.num_actions) {
    throw ActionOutOfRange("action " + std::to_string(action) + " not in [0, " +
                           std::to_string(arch.num_actions) + ")");
  }
}

Vector network_input(const MlpArchitecture& arch, std::span<const double> state,
                     std::size_t action) {
  if (arch.head == HeadMode::MultiHead) return to_vector(state);
  return encode_input(state, action, arch);
}

// Runs all hidden layers. For MultiHead with a single `action`, only that head
// row is evaluated; pass all_heads to get the full output vector.
Pass run_forward(const MlpArchitecture& arch, const std::vector<LayerShape>& layers,
                 const ParamVector& theta, Vector input, std::size_t action, bool all_heads) {
  Pass pass;
  pass.acts.reserve(layers.size() + 1);
  pass.acts.push_back(std::move(input));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ls = layers[l];
    const Vector& x = pass.acts.back();
    const bool last = l + 1 == layers.size();
    Vector y = Vector::Zero(static_cast<Eigen::Index>(ls.fan_out));
    const auto w = slice(theta, ls.weight_offset, ls.fan_in * ls.fan_out);
    const auto b = slice(theta, ls.bias_offset, ls.fan_out);
    if (last && arch.head == HeadMode::MultiHead && !all_heads) {
      y[static_cast<Eigen::Index>(action)] =
          kernels::dot(w.subspan(action * ls.fan_in, ls.fan_in), as_span(x)) + b[action];
    } else {
      kernels::gemv(w, ls.fan_out, ls.fan_in, as_span(x), as_span(y));
      for (std::size_t o = 0; o < ls.fan_out; ++o) y[static_cast<Eigen::Index>(o)] += b[o];
    }
    if (!last) y = y.cwiseMax(0.0);
    pass.acts.push_back(std::move(y));
  }
  const std::size_t out = arch.head == HeadMode::MultiHead ? action : 0;
  pass.value = pass.acts.back()[static_cast<Eigen::Index>(out)];
  return pass;
}

// grad += scale * d value / d theta for the output selected in run_forward.
void backprop(const MlpArchitecture& arch, const std::vector<LayerShape>& layers,
              const ParamVector& theta, const Pass& pass, std::size_t action, double scale,
              Vector& grad) {
  const auto& top = layers.back();
  Vector delta = Vector::Zero(static_cast<Eigen::Index>(top.fan_out));
  delta[static_cast<Eigen::Index>(arch.head == HeadMode::MultiHead ? action : 0)] = scale;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& ls = layers[l];
    const Vector& x = pass.acts[l];
    std::span<double> gw{grad.data() + ls.weight_offset, ls.fan_in * ls.fan_out};
    kernels::ger(1.0, as_span(delta), as_span(x), gw);
    for (std::size_t o = 0; o < ls.fan_out; ++o) {
      grad[static_cast<Eigen::Index>(ls.bias_offset + o)] += delta[static_cast<Eigen::Index>(o)];
    }
    if (l == 0) break;
    Vector prev = Vector::Zero(static_cast<Eigen::Index>(ls.fan_in));
    kernels::gemv_t(slice(theta, ls.weight_offset, ls.fan_in * ls.fan_out), ls.fan_out, ls.fan_in,
                    as_span(delta), as_span(prev));
    for (Eigen::Index i = 0; i < prev.size(); ++i) {
      if (x[i] <= 0.0) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
}

}  // namespace

std::size_t MlpArchitecture::input_width() const {
  switch (head) {
    case HeadMode::MultiHead: return state_dim;
    case HeadMode::Concat: return state_dim + num_actions;
    case HeadMode::OneHotBlock: return state_dim * num_actions;
  }
  return state_dim;
}

std::size_t MlpArchitecture::output_width() const {
  return head == HeadMode::MultiHead ? num_actions : 1;
}

void MlpArchitecture::validate() const {
  if (state_dim == 0) throw ShapeError("state_dim must be positive");
  if (num_actions == 0) throw ShapeError("num_actions must be positive");
  for (auto h : hidden) {
    if (h == 0) throw ShapeError("hidden layer widths must be positive");
  }
}

std::vector<LayerShape> layer_shapes(const MlpArchitecture& arch) {
  arch.validate();
  std::vector<LayerShape> layers;
  std::size_t fan_in = arch.input_width();
  std::size_t offset = 0;
  auto add = [&](std::size_t fan_out) {
    LayerShape ls{fan_in, fan_out, offset, offset + fan_in * fan_out};
    offset = ls.bias_offset + fan_out;
    layers.push_back(ls);
    fan_in = fan_out;
  };
  for (auto h : arch.hidden) add(h);
  add(arch.output_width());
  return layers;
}

std::size_t param_count(const MlpArchitecture& arch) {
  const auto layers = layer_shapes(arch);
  return layers.back().bias_offset + layers.back().fan_out;
}

ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  const auto layers = layer_shapes(arch);
  ParamVector theta = ParamVector::Zero(static_cast<Eigen::Index>(param_count(arch)));
  Rng rng(mix_seed(seed, 0x1417));
  for (const auto& ls : layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(ls.fan_in + ls.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < ls.fan_in * ls.fan_out; ++i) {
      theta[static_cast<Eigen::Index>(ls.weight_offset + i)] = dist(rng);
    }
  }
  return theta;
}

Vector encode_input(std::span<const double> state, std::size_t action,
                    const MlpArchitecture& arch) {
  check_state(arch, state);
  check_action(arch, action);
  const auto n = static_cast<Eigen::Index>(arch.state_dim);
  switch (arch.head) {
    case HeadMode::MultiHead: return to_vector(state);
    case HeadMode::Concat: {
      Vector x = Vector::Zero(n + static_cast<Eigen::Index>(arch.num_actions));
      x.head(n) = to_vector(state);
      x[n + static_cast<Eigen::Index>(action)] = 1.0;
      return x;
    }
    case HeadMode::OneHotBlock: {
      Vector x = Vector::Zero(static_cast<Eigen::Index>(arch.input_width()));
      x.segment(static_cast<Eigen::Index>(action) * n, n) = to_vector(state);
      return x;
    }
  }
  return to_vector(state);
}

double forward(const MlpArchitecture& arch, const ParamVector& theta,
               std::span<const double> state, std::size_t action) {
  check_theta(arch, theta);
  check_state(arch, state);
  check_action(arch, action);
  const auto layers = layer_shapes(arch);
  return run_forward(arch, layers, theta, network_input(arch, state, action), action, false).value;
}

Vector forward_all_actions(const MlpArchitecture& arch, const ParamVector& theta,
                           std::span<const double> state) {
  check_theta(arch, theta);
  check_state(arch, state);
  const auto layers = layer_shapes(arch);
  if (arch.head == HeadMode::MultiHead) {
    return run_forward(arch, layers, theta, to_vector(state), 0, true).acts.back();
  }
  Vector out(static_cast<Eigen::Index>(arch.num_actions));
  for (std::size_t a = 0; a < arch.num_actions; ++a) {
    out[static_cast<Eigen::Index>(a)] =
        run_forward(arch, layers, theta, encode_input(state, a, arch), a, false).value;
  }
  return out;
}

ValueAndGrad value_and_grad(const MlpArchitecture& arch, const ParamVector& theta,
                            std::span<const double> state, std::size_t action) {
  check_theta(arch, theta);
  check_state(arch, state);
  check_action(arch, action);
  const auto layers = layer_shapes(arch);
  const Pass pass =
      run_forward(arch, layers, theta, network_input(arch, state, action), action, false);
  ValueAndGrad out{pass.value, Vector::Zero(theta.size())};
  backprop(arch, layers, theta, pass, action, 1.0, out.grad);
  return out;
}

Vector grad_params(const MlpArchitecture& arch, const ParamVector& theta,
                   std::span<const double> state, std::size_t action) {
  return value_and_grad(arch, theta, state, action).grad;
}

Vector penultimate_features(const MlpArchitecture& arch, const ParamVector& theta,
                            std::span<const double> state) {
  if (arch.hidden.empty()) throw NoHiddenLayer("penultimate features need a hidden layer");
  if (arch.head != HeadMode::MultiHead) {
    throw ShapeError("penultimate features are defined for the multi-head architecture");
  }
  check_theta(arch, theta);
  check_state(arch, state);
  const auto layers = layer_shapes(arch);
  Vector x = to_vector(state);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& ls = layers[l];
    Vector y(static_cast<Eigen::Index>(ls.fan_out));
    kernels::gemv(slice(theta, ls.weight_offset, ls.fan_in * ls.fan_out), ls.fan_out, ls.fan_in,
                  as_span(x), as_span(y));
    for (std::size_t o = 0; o < ls.fan_out; ++o) {
      y[static_cast<Eigen::Index>(o)] += theta[static_cast<Eigen::Index>(ls.bias_offset + o)];
    }
    x = y.cwiseMax(0.0);
  }
  return x;
}

Vector head_weights(const MlpArchitecture& arch, const ParamVector& theta, std::size_t action) {
  if (arch.head != HeadMode::MultiHead) throw ShapeError("head weights need a multi-head network");
  check_theta(arch, theta);
  check_action(arch, action);
  const auto top = layer_shapes(arch).back();
  return theta.segment(static_cast<Eigen::Index>(top.weight_offset + action * top.fan_in),
                       static_cast<Eigen::Index>(top.fan_in));
}

double head_bias(const MlpArchitecture& arch, const ParamVector& theta, std::size_t action) {
  if (arch.head != HeadMode::MultiHead) throw ShapeError("head bias needs a multi-head network");
  check_theta(arch, theta);
  check_action(arch, action);
  const auto top = layer_shapes(arch).back();
  return theta[static_cast<Eigen::Index>(top.bias_offset + action)];
}

void SgdConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ShapeError("learning_rate must be non-negative");
  if (epochs == 0) throw ShapeError("epochs must be positive");
  if (batch_size == 0) throw ShapeError("batch_size must be positive");
}

void sgd_step(const MlpArchitecture& arch, ParamVector& theta, std::span<const Observation> data,
              std::span<const std::size_t> batch, double learning_rate) {
  if (batch.empty()) return;
  const auto layers = layer_shapes(arch);
  Vector grad = Vector::Zero(theta.size());
  const double inv = 2.0 / static_cast<double>(batch.size());
  for (auto j : batch) {
    const auto& obs = data[j];
    check_state(arch, as_span(obs.state));
    check_action(arch, obs.action);
    const Pass pass = run_forward(arch, layers, theta,
                                  network_input(arch, as_span(obs.state), obs.action), obs.action,
                                  false);
    const double residual = pass.value - obs.reward;
    if (residual != 0.0) backprop(arch, layers, theta, pass, obs.action, inv * residual, grad);
  }
  theta.noalias() -= learning_rate * grad;
}

namespace {

template <class OnStep>
void run_sgd(const MlpArchitecture& arch, ParamVector& theta, std::span<const Observation> data,
             const SgdConfig& cfg, OnStep&& on_step) {
  if (data.empty()) throw EmptyDataset("SGD needs at least one observation");
  cfg.validate();
  check_theta(arch, theta);
  Rng rng(mix_seed(cfg.seed, 0x56d));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      sgd_step(arch, theta, data, std::span<const std::size_t>(order).subspan(start, stop - start),
               cfg.learning_rate);
      on_step(theta);
    }
  }
}

}  // namespace

std::vector<ParamVector> sgd_train(const MlpArchitecture& arch, const ParamVector& theta0,
                                   std::span<const Observation> data, const SgdConfig& cfg) {
  std::vector<ParamVector> iterates{theta0};
  ParamVector theta = theta0;
  run_sgd(arch, theta, data, cfg, [&](const ParamVector& t) { iterates.push_back(t); });
  return iterates;
}

ParamVector sgd_fit(const MlpArchitecture& arch, const ParamVector& theta0,
                    std::span<const Observation> data, const SgdConfig& cfg) {
  ParamVector theta = theta0;
  run_sgd(arch, theta, data, cfg, [](const ParamVector&) {});
  return theta;
}

double mean_squared_error(const MlpArchitecture& arch, const ParamVector& theta,
                          std::span<const Observation> data) {
  if (data.empty()) throw EmptyDataset("mean squared error of an empty dataset");
  double total = 0.0;
  for (const auto& obs : data) {
    const double r = forward(arch, theta, as_span(obs.state), obs.action) - obs.reward;
    total += r * r;
  }
  return total / static_cast<double>(data.size());
}

}  // namespace subkalman
