#pragma once

// Experiment configuration, object factories, SVG charts and the command-line
// entry point behind the `subkalman` tool.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "subkalman/harness.hpp"

namespace subkalman::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("ConfigError: " + field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline constexpr int kConfigVersion = 1;

struct AgentSpec {
  std::string kind;
  std::string label;
  nlohmann::json params;  // validated by make_agent_factory
  std::string path;       // for error messages, e.g. "agents[1]"
};

struct EnvSpec {
  std::string kind;
  nlohmann::json params;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t horizon = 0;
  std::size_t pulls_per_arm = 20;
  std::string output = "out";
  bool timing = false;
  std::size_t threads = 0;
  EnvSpec env;
  std::vector<AgentSpec> agents;
  std::vector<std::size_t> dims;
  std::string base_dir;  // relative data paths resolve against this
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// Stable hash of the parsed configuration, recorded in every trace.
std::string config_fingerprint(const ExperimentConfig& cfg);

using EnvFactory = std::function<EnvPtr(std::uint64_t seed)>;
using AgentFactory = std::function<std::unique_ptr<Agent>(std::uint64_t seed, const EnvPtr& env)>;

// Loads any datasets once; the returned factory only varies the seed.
EnvFactory make_env_factory(const ExperimentConfig& cfg);
// Validates hyperparameters against the environment's shape.
AgentFactory make_agent_factory(const AgentSpec& spec, const BanditEnv& probe);

TrialSpec make_trial_spec(const ExperimentConfig& cfg, const EnvFactory& env, const AgentSpec& agent);

struct BarSeries {
  std::string label;
  double mean;
  double stdev;
};
struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// 800x500 viewBox. One <g class="bar-group"> per series with a bar and a whisker.
std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<BarSeries>& series);
// One <polyline class="series"> per series.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<LineSeries>& series);

// Entry point. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subkalman::cli
