#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fields.hpp"

namespace subkalman::cli {

ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir) {
  detail::Fields top(doc, "");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.version = top.require<int>("version");
  if (cfg.version != kConfigVersion) {
    throw ConfigError("version", "unsupported version " + std::to_string(cfg.version) + " (expected " +
                                     std::to_string(kConfigVersion) + ")");
  }
  cfg.seed = top.get<std::uint64_t>("seed", 0);
  cfg.trials = top.get<std::size_t>("trials", 1);
  if (cfg.trials == 0) throw ConfigError("trials", "must be at least 1");
  cfg.horizon = top.require<std::size_t>("horizon");
  cfg.pulls_per_arm = top.get<std::size_t>("pulls_per_arm", 20);
  if (cfg.pulls_per_arm == 0) throw ConfigError("pulls_per_arm", "must be at least 1");
  cfg.output = top.get<std::string>("output", "out");
  cfg.timing = top.get<bool>("timing", false);
  cfg.threads = top.get<std::size_t>("threads", 0);
  cfg.dims = top.get<std::vector<std::size_t>>("dims", {});

  if (!top.has("env")) throw ConfigError("env", "required field is missing");
  const auto& env = top.raw("env");
  if (!env.is_object()) throw ConfigError("env", "expected an object");
  if (!env.contains("kind") || !env.at("kind").is_string()) throw ConfigError("env.kind", "required string");
  cfg.env.kind = env.at("kind").get<std::string>();
  cfg.env.params = env;
  cfg.env.params.erase("kind");

  auto add_agent = [&](const nlohmann::json& a, const std::string& path) {
    if (!a.is_object()) throw ConfigError(path, "expected an object");
    if (!a.contains("kind") || !a.at("kind").is_string()) throw ConfigError(path + ".kind", "required string");
    AgentSpec spec;
    spec.kind = a.at("kind").get<std::string>();
    spec.path = path;
    spec.label = spec.kind;
    spec.params = a;
    spec.params.erase("kind");
    if (a.contains("label")) {
      if (!a.at("label").is_string() || a.at("label").get<std::string>().empty()) {
        throw ConfigError(path + ".label", "expected a non-empty string");
      }
      spec.label = a.at("label").get<std::string>();
      spec.params.erase("label");
    }
    for (char c : spec.label) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
        throw ConfigError(path + ".label", "use letters, digits, '_', '-' or '.' only");
      }
    }
    cfg.agents.push_back(std::move(spec));
  };
  if (top.has("agents") && top.has("agent")) throw ConfigError("agent", "give either 'agent' or 'agents', not both");
  if (top.has("agents")) {
    const auto& list = top.raw("agents");
    if (!list.is_array() || list.empty()) throw ConfigError("agents", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) add_agent(list[i], "agents[" + std::to_string(i) + "]");
  } else if (top.has("agent")) {
    add_agent(top.raw("agent"), "agent");
  } else {
    throw ConfigError("agents", "required field is missing");
  }
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.agents[i].label == cfg.agents[j].label) {
        throw ConfigError(cfg.agents[i].path + ".label", "duplicate label '" + cfg.agents[i].label + "'");
      }
    }
  }
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", path + " is not valid JSON: " + e.what());
  }
  auto dir = std::filesystem::path(path).parent_path();
  return parse_config(doc, dir.empty() ? "." : dir.string());
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["horizon"] = cfg.horizon;
  j["pulls_per_arm"] = cfg.pulls_per_arm;
  j["env"] = cfg.env.params;
  j["env"]["kind"] = cfg.env.kind;
  for (const auto& a : cfg.agents) {
    nlohmann::json aj = a.params;
    aj["kind"] = a.kind;
    aj["label"] = a.label;
    j["agents"].push_back(aj);
  }
  const std::string text = j.dump();
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
  return buf;
}

}  // namespace subkalman::cli
