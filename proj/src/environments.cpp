#include "subkalman/environments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "subkalman/sampling.hpp"

namespace subkalman {
namespace {

constexpr std::uint64_t kStateStream = 0x57a7e;
constexpr std::uint64_t kNoiseStream = 0x4015e;
constexpr std::uint64_t kWeightStream = 0x3e16;

Rng step_rng(std::uint64_t seed, std::uint64_t stream, std::size_t t) {
  return Rng(mix_seed(mix_seed(seed, stream), t));
}

double noise_draw(std::uint64_t seed, std::size_t t, std::size_t action) {
  Rng rng(mix_seed(mix_seed(mix_seed(seed, kNoiseStream), t), action));
  return std::normal_distribution<double>()(rng);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_index(const std::string& s, std::size_t& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

std::vector<std::size_t> warmup_schedule(std::size_t num_actions, std::size_t pulls_per_arm) {
  if (num_actions == 0 || pulls_per_arm == 0) {
    throw ShapeError("warmup schedule needs at least one arm and one pull per arm");
  }
  std::vector<std::size_t> out;
  out.reserve(num_actions * pulls_per_arm);
  for (std::size_t w = 0; w < pulls_per_arm; ++w) {
    for (std::size_t a = 0; a < num_actions; ++a) out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------

TabularDataset read_csv_dataset(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(trim(line), ',');
      break;
    }
  }
  if (header.empty()) throw ParseError(source, lineno, "missing header row");
  if (header.back() != "label") throw SchemaError(header.back(), "last column must be named 'label'");
  if (header.size() < 2) throw SchemaError("label", "need at least one feature column");
  for (std::size_t c = 0; c + 1 < header.size(); ++c) {
    if (header[c].empty()) throw SchemaError("#" + std::to_string(c + 1), "empty column name");
  }
  const std::size_t cols = header.size() - 1;
  std::vector<double> values;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t, ',');
    if (fields.size() != header.size()) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v;
      if (!parse_double(fields[c], v)) {
        if (fields[c].empty()) throw SchemaError(header[c], "missing value on line " + std::to_string(lineno));
        throw SchemaError(header[c], "non-numeric value '" + fields[c] + "' on line " + std::to_string(lineno));
      }
      values.push_back(v);
    }
    std::size_t label;
    if (!parse_index(fields.back(), label)) {
      throw SchemaError("label", "expected a non-negative integer, got '" + fields.back() + "' on line " +
                                     std::to_string(lineno));
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw EmptyDataset(source + " has no data rows");
  TabularDataset data;
  data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(cols));
  data.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  data.labels = std::move(labels);
  return data;
}

TabularDataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_csv_dataset(in, path);
}

void write_csv_dataset(std::ostream& out, const TabularDataset& data) {
  for (std::size_t c = 0; c < data.cols(); ++c) out << 'x' << c << ',';
  out << "label\n";
  std::ostringstream row;
  row.precision(17);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    row.str("");
    for (std::size_t c = 0; c < data.cols(); ++c) {
      row << data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) << ',';
    }
    row << data.labels[r] << '\n';
    out << row.str();
  }
}

// ---------------------------------------------------------------------------

ClassificationEnv::ClassificationEnv(std::shared_ptr<const TabularDataset> data, std::uint64_t seed,
                                     bool shuffle, std::size_t num_actions)
    : data_(std::move(data)) {
  if (!data_ || data_->rows() == 0) throw EmptyDataset("classification environment needs rows");
  if (static_cast<std::size_t>(data_->features.rows()) != data_->rows()) {
    throw ShapeError("feature rows do not match label count");
  }
  num_actions_ = num_actions == 0 ? data_->num_classes : num_actions;
  for (std::size_t r = 0; r < data_->rows(); ++r) {
    if (data_->labels[r] >= num_actions_) {
      throw LabelOutOfRange("row " + std::to_string(r) + " has label " +
                            std::to_string(data_->labels[r]) + " but there are " +
                            std::to_string(num_actions_) + " actions");
    }
  }
  order_.resize(data_->rows());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(mix_seed(seed, 0x5f1));
    std::shuffle(order_.begin(), order_.end(), rng);
  }
}

std::size_t ClassificationEnv::row(std::size_t t) const {
  if (t >= order_.size()) {
    throw HorizonTooShort("step " + std::to_string(t) + " beyond the " + std::to_string(order_.size()) +
                          " dataset rows");
  }
  return order_[t];
}

Vector ClassificationEnv::state(std::size_t t) const {
  return data_->features.row(static_cast<Eigen::Index>(row(t))).transpose();
}

std::size_t ClassificationEnv::label(std::size_t t) const { return data_->labels[row(t)]; }

double ClassificationEnv::reward(std::size_t t, std::size_t action) const {
  if (action >= num_actions_) throw ActionOutOfRange(std::to_string(action));
  return action == label(t) ? 1.0 : 0.0;
}

std::optional<std::size_t> ClassificationEnv::optimal_action(std::size_t t) const { return label(t); }

// ---------------------------------------------------------------------------

SyntheticLinearEnv::SyntheticLinearEnv(std::size_t state_dim, std::size_t num_actions,
                                       double noise_std, std::uint64_t seed)
    : noise_std_(noise_std), seed_(seed) {
  if (state_dim == 0 || num_actions == 0) throw ShapeError("synthetic env needs positive sizes");
  if (!(noise_std >= 0.0)) throw ShapeError("noise standard deviation must be non-negative");
  Rng rng(mix_seed(seed, kWeightStream));
  std::normal_distribution<double> normal;
  weights_.resize(static_cast<Eigen::Index>(num_actions), static_cast<Eigen::Index>(state_dim));
  for (Eigen::Index a = 0; a < weights_.rows(); ++a) {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) weights_(a, j) = normal(rng);
  }
}

Vector SyntheticLinearEnv::state(std::size_t t) const {
  Rng rng = step_rng(seed_, kStateStream, t);
  return standard_normal(state_dim(), rng);
}

double SyntheticLinearEnv::mean_reward(std::size_t t, std::size_t action) const {
  if (action >= num_actions()) throw ActionOutOfRange(std::to_string(action));
  return weights_.row(static_cast<Eigen::Index>(action)).dot(state(t));
}

double SyntheticLinearEnv::reward(std::size_t t, std::size_t action) const {
  const double mean = mean_reward(t, action);
  return noise_std_ == 0.0 ? mean : mean + noise_std_ * noise_draw(seed_, t, action);
}

std::optional<double> SyntheticLinearEnv::optimal_reward(std::size_t t) const {
  return (weights_ * state(t)).maxCoeff();
}

std::optional<std::size_t> SyntheticLinearEnv::optimal_action(std::size_t t) const {
  const Vector means = weights_ * state(t);
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < means.size(); ++a) {
    if (means[a] > means[best]) best = a;
  }
  return static_cast<std::size_t>(best);
}

// ---------------------------------------------------------------------------

SyntheticNonlinearEnv::SyntheticNonlinearEnv(std::size_t state_dim, std::size_t num_actions,
                                             std::vector<std::size_t> teacher_hidden,
                                             double noise_std, std::uint64_t seed)
    : noise_std_(noise_std), seed_(seed) {
  if (!(noise_std >= 0.0)) throw ShapeError("noise standard deviation must be non-negative");
  arch_.state_dim = state_dim;
  arch_.hidden = std::move(teacher_hidden);
  arch_.num_actions = num_actions;
  arch_.head = HeadMode::MultiHead;
  arch_.validate();
  teacher_ = init_params(arch_, mix_seed(seed, kWeightStream));
  // Normalise so the mean rewards have roughly unit spread.
  Rng rng(mix_seed(seed, 0x5ca1e));
  double sum = 0.0, sum2 = 0.0;
  const int probes = 512;
  for (int i = 0; i < probes; ++i) {
    const Vector s = standard_normal(state_dim, rng);
    const Vector f = forward_all_actions(arch_, teacher_, as_span(s));
    sum += f.sum();
    sum2 += f.squaredNorm();
  }
  const double n = static_cast<double>(probes * num_actions);
  const double var = sum2 / n - (sum / n) * (sum / n);
  scale_ = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
}

Vector SyntheticNonlinearEnv::state(std::size_t t) const {
  Rng rng = step_rng(seed_, kStateStream, t);
  return standard_normal(arch_.state_dim, rng);
}

double SyntheticNonlinearEnv::mean_reward(std::size_t t, std::size_t action) const {
  if (action >= num_actions()) throw ActionOutOfRange(std::to_string(action));
  const Vector s = state(t);
  return scale_ * forward(arch_, teacher_, as_span(s), action);
}

double SyntheticNonlinearEnv::reward(std::size_t t, std::size_t action) const {
  const double mean = mean_reward(t, action);
  return noise_std_ == 0.0 ? mean : mean + noise_std_ * noise_draw(seed_, t, action);
}

std::optional<double> SyntheticNonlinearEnv::optimal_reward(std::size_t t) const {
  const Vector s = state(t);
  return scale_ * forward_all_actions(arch_, teacher_, as_span(s)).maxCoeff();
}

std::optional<std::size_t> SyntheticNonlinearEnv::optimal_action(std::size_t t) const {
  const Vector s = state(t);
  const Vector f = forward_all_actions(arch_, teacher_, as_span(s));
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < f.size(); ++a) {
    if (f[a] > f[best]) best = a;
  }
  return static_cast<std::size_t>(best);
}

TabularDataset synthetic_classification_dataset(std::size_t rows, std::size_t state_dim,
                                                std::size_t num_classes,
                                                std::vector<std::size_t> teacher_hidden,
                                                std::uint64_t seed) {
  if (rows == 0) throw EmptyDataset("synthetic dataset needs rows");
  MlpArchitecture arch;
  arch.state_dim = state_dim;
  arch.hidden = std::move(teacher_hidden);
  arch.num_actions = num_classes;
  arch.head = HeadMode::MultiHead;
  arch.validate();
  const ParamVector teacher = init_params(arch, mix_seed(seed, kWeightStream));
  Rng rng(mix_seed(seed, kStateStream));
  TabularDataset data;
  data.num_classes = num_classes;
  data.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(state_dim));
  Matrix logits(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(num_classes));
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    const Vector s = standard_normal(state_dim, rng);
    data.features.row(r) = s.transpose();
    logits.row(r) = forward_all_actions(arch, teacher, as_span(s)).transpose();
  }
  // Standardising each logit column keeps the classes roughly balanced.
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    col = (col.array() - mean) / (sd > 0.0 ? sd : 1.0);
  }
  data.labels.resize(rows);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    data.labels[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
  }
  return data;
}

}  // namespace subkalman
