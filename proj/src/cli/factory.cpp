#include <filesystem>

#include "fields.hpp"

namespace subkalman::cli {
namespace {

std::string resolve(const ExperimentConfig& cfg, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(cfg.base_dir) / p).lexically_normal().string();
}

HeadMode parse_head(const std::string& s, const std::string& where) {
  if (s == "multi_head") return HeadMode::MultiHead;
  if (s == "concat") return HeadMode::Concat;
  if (s == "one_hot_block") return HeadMode::OneHotBlock;
  throw ConfigError(where, "unknown head '" + s + "' (multi_head, concat, one_hot_block)");
}

MlpArchitecture read_arch(detail::Fields& p, const BanditEnv& env, HeadMode fallback) {
  MlpArchitecture arch;
  arch.state_dim = env.state_dim();
  arch.num_actions = env.num_actions();
  arch.hidden = p.get<std::vector<std::size_t>>("hidden", {50});
  for (auto h : arch.hidden) {
    if (h == 0) throw ConfigError(p.where("hidden"), "layer widths must be positive");
  }
  arch.head = parse_head(p.get<std::string>("head", fallback == HeadMode::OneHotBlock ? "one_hot_block"
                                                    : fallback == HeadMode::Concat   ? "concat"
                                                                                     : "multi_head"),
                         p.where("head"));
  return arch;
}

SgdConfig read_sgd(detail::Fields& p, std::size_t default_epochs) {
  SgdConfig sgd;
  sgd.learning_rate = p.get<double>("learning_rate", sgd.learning_rate);
  sgd.epochs = p.get<std::size_t>("epochs", default_epochs);
  sgd.batch_size = p.get<std::size_t>("batch_size", sgd.batch_size);
  if (!(sgd.learning_rate >= 0.0)) throw ConfigError(p.where("learning_rate"), "must be non-negative");
  if (sgd.epochs == 0) throw ConfigError(p.where("epochs"), "must be positive");
  if (sgd.batch_size == 0) throw ConfigError(p.where("batch_size"), "must be positive");
  return sgd;
}

NigPrior read_prior(detail::Fields& p, double default_precision) {
  NigPrior prior;
  prior.precision = p.get<double>("prior_precision", default_precision);
  prior.a0 = p.get<double>("a0", prior.a0);
  prior.b0 = p.get<double>("b0", prior.b0);
  if (!(prior.precision > 0.0)) throw ConfigError(p.where("prior_precision"), "must be positive");
  if (!(prior.a0 > 0.0)) throw ConfigError(p.where("a0"), "must be positive");
  if (!(prior.b0 > 0.0)) throw ConfigError(p.where("b0"), "must be positive");
  return prior;
}

std::size_t positive(detail::Fields& p, const std::string& key, std::size_t fallback) {
  const auto v = p.get<std::size_t>(key, fallback);
  if (v == 0) throw ConfigError(p.where(key), "must be positive");
  return v;
}

EkfMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "subspace_full") return EkfMode::SubspaceFull;
  if (s == "subspace_diag") return EkfMode::SubspaceDiag;
  if (s == "full") return EkfMode::FullSpace;
  if (s == "diag") return EkfMode::DiagSpace;
  throw ConfigError(where, "unknown mode '" + s + "' (subspace_full, subspace_diag, full, diag)");
}

SubspaceKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "svd") return SubspaceKind::Svd;
  if (s == "random") return SubspaceKind::Random;
  if (s == "identity") return SubspaceKind::Identity;
  throw ConfigError(where, "unknown subspace '" + s + "' (svd, random, identity)");
}

}  // namespace

EnvFactory make_env_factory(const ExperimentConfig& cfg) {
  detail::Fields p(cfg.env.params, "env");
  const std::string& kind = cfg.env.kind;
  EnvFactory factory;
  if (kind == "synthetic_linear") {
    const auto dim = positive(p, "state_dim", 8);
    const auto arms = positive(p, "num_actions", 4);
    const double noise = p.get<double>("noise_std", 0.1);
    if (!(noise >= 0.0)) throw ConfigError("env.noise_std", "must be non-negative");
    factory = [=](std::uint64_t seed) { return std::make_shared<SyntheticLinearEnv>(dim, arms, noise, seed); };
  } else if (kind == "synthetic_nonlinear") {
    const auto dim = positive(p, "state_dim", 8);
    const auto arms = positive(p, "num_actions", 4);
    const auto hidden = p.get<std::vector<std::size_t>>("hidden", {16});
    const double noise = p.get<double>("noise_std", 0.1);
    if (!(noise >= 0.0)) throw ConfigError("env.noise_std", "must be non-negative");
    factory = [=](std::uint64_t seed) {
      return std::make_shared<SyntheticNonlinearEnv>(dim, arms, hidden, noise, seed);
    };
  } else if (kind == "synthetic_classification") {
    const auto rows = positive(p, "rows", cfg.horizon);
    const auto dim = positive(p, "state_dim", 9);
    const auto arms = positive(p, "num_actions", 7);
    const auto hidden = p.get<std::vector<std::size_t>>("hidden", {32});
    const auto data_seed = p.get<std::uint64_t>("data_seed", cfg.seed);
    auto data = std::make_shared<const TabularDataset>(
        synthetic_classification_dataset(rows, dim, arms, hidden, data_seed));
    factory = [=](std::uint64_t seed) { return std::make_shared<ClassificationEnv>(data, seed); };
  } else if (kind == "csv") {
    const auto path = resolve(cfg, p.require<std::string>("path"));
    const bool shuffle = p.get<bool>("shuffle", true);
    const auto arms = p.get<std::size_t>("num_actions", 0);
    auto data = std::make_shared<const TabularDataset>(load_csv_dataset(path));
    factory = [=](std::uint64_t seed) { return std::make_shared<ClassificationEnv>(data, seed, shuffle, arms); };
  } else if (kind == "movielens") {
    const auto path = resolve(cfg, p.require<std::string>("path"));
    const auto movies = positive(p, "num_movies", 20);
    const auto rank = positive(p, "rank", 20);
    const auto ratings = load_movielens(path);
    auto sim = std::make_shared<const MovieLensSim>(build_movielens(ratings, movies, rank));
    factory = [=](std::uint64_t seed) { return std::make_shared<MovieLensEnv>(sim, seed); };
  } else {
    throw ConfigError("env.kind", "unknown environment '" + kind +
                                      "' (synthetic_linear, synthetic_nonlinear, synthetic_classification, csv, "
                                      "movielens)");
  }
  p.finish();
  return factory;
}

AgentFactory make_agent_factory(const AgentSpec& spec, const BanditEnv& probe) {
  detail::Fields p(spec.params, spec.path);
  AgentFactory factory;
  const std::string& kind = spec.kind;
  if (kind == "linear_ts") {
    LinearTsConfig c;
    c.state_dim = probe.state_dim();
    c.num_actions = probe.num_actions();
    c.prior = read_prior(p, kDefaultPriorPrecision);
    factory = [c](std::uint64_t, const EnvPtr&) { return std::make_unique<LinearTsAgent>(c); };
  } else if (kind == "neural_linear") {
    NeuralLinearConfig c;
    c.arch = read_arch(p, probe, HeadMode::MultiHead);
    c.update_period = positive(p, "update_period", c.update_period);
    c.memory_cap = p.get<std::size_t>("memory_cap", 0);
    c.sgd = read_sgd(p, c.sgd.epochs);
    c.prior = read_prior(p, c.prior.precision);
    c.head_prior_mean = p.get<bool>("head_prior_mean", false);
    factory = [c](std::uint64_t seed, const EnvPtr&) {
      auto cc = c;
      cc.seed = seed;
      return std::make_unique<NeuralLinearAgent>(cc);
    };
  } else if (kind == "lim2") {
    Lim2Config c;
    c.arch = read_arch(p, probe, HeadMode::MultiHead);
    c.memory = positive(p, "memory", c.memory);
    c.warmup_sgd = read_sgd(p, c.warmup_sgd.epochs);
    c.batch_size = c.warmup_sgd.batch_size;
    c.learning_rate = c.warmup_sgd.learning_rate;
    c.pgd_steps = p.get<std::size_t>("pgd_steps", c.pgd_steps);
    c.pgd_rate = p.get<double>("pgd_rate", c.pgd_rate);
    if (!(c.pgd_rate >= 0.0)) throw ConfigError(p.where("pgd_rate"), "must be non-negative");
    c.prior = read_prior(p, c.prior.precision);
    factory = [c](std::uint64_t seed, const EnvPtr&) {
      auto cc = c;
      cc.seed = seed;
      return std::make_unique<Lim2Agent>(cc);
    };
  } else if (kind == "neural_ts") {
    NeuralTsConfig c;
    c.arch = read_arch(p, probe, HeadMode::OneHotBlock);
    if (c.arch.head != HeadMode::OneHotBlock) {
      throw ConfigError(p.where("head"), "neural_ts needs the one_hot_block head");
    }
    c.lambda = p.get<double>("lambda", c.lambda);
    c.exploration = p.get<double>("exploration", c.exploration);
    if (!(c.lambda > 0.0)) throw ConfigError(p.where("lambda"), "must be positive");
    if (!(c.exploration >= 0.0)) throw ConfigError(p.where("exploration"), "must be non-negative");
    c.update_period = positive(p, "update_period", c.update_period);
    c.sgd = read_sgd(p, c.sgd.epochs);
    factory = [c](std::uint64_t seed, const EnvPtr&) {
      auto cc = c;
      cc.seed = seed;
      return std::make_unique<NeuralTsAgent>(cc);
    };
  } else if (kind == "ekf_ts") {
    EkfTsConfig c;
    c.arch = read_arch(p, probe, HeadMode::MultiHead);
    c.mode = parse_mode(p.get<std::string>("mode", "subspace_full"), p.where("mode"));
    c.kind = parse_kind(p.get<std::string>("subspace", "svd"), p.where("subspace"));
    c.dim = positive(p, "dim", c.dim);
    c.thin = positive(p, "thin", c.thin);
    c.prior_std = p.get<double>("prior_std", c.prior_std);
    const double obs_std = p.get<double>("obs_std", std::sqrt(c.noise.obs_var));
    c.noise.obs_var = obs_std * obs_std;
    c.noise.process_var = p.get<double>("process_var", c.noise.process_var);
    if (!(c.prior_std >= 0.0)) throw ConfigError(p.where("prior_std"), "must be non-negative");
    if (!(obs_std > 0.0)) throw ConfigError(p.where("obs_std"), "must be positive");
    if (!(c.noise.process_var >= 0.0)) throw ConfigError(p.where("process_var"), "must be non-negative");
    c.sgd = read_sgd(p, c.sgd.epochs);
    const std::size_t full = param_count(c.arch);
    const bool subspace = c.mode == EkfMode::SubspaceFull || c.mode == EkfMode::SubspaceDiag;
    if (subspace && c.kind != SubspaceKind::Identity && c.dim > full) {
      throw DimensionError(p.where("dim") + " = " + std::to_string(c.dim) + " exceeds the " +
                           std::to_string(full) + " network parameters");
    }
    factory = [c](std::uint64_t seed, const EnvPtr&) {
      auto cc = c;
      cc.seed = seed;
      return std::make_unique<EkfTsAgent>(cc);
    };
  } else if (kind == "neural_greedy") {
    NeuralGreedyConfig c;
    c.arch = read_arch(p, probe, HeadMode::MultiHead);
    c.update_period = positive(p, "update_period", c.update_period);
    c.sgd = read_sgd(p, c.sgd.epochs);
    factory = [c](std::uint64_t seed, const EnvPtr&) {
      auto cc = c;
      cc.seed = seed;
      return std::make_unique<NeuralGreedyAgent>(cc);
    };
  } else if (kind == "random") {
    const std::size_t arms = probe.num_actions();
    factory = [arms](std::uint64_t, const EnvPtr&) { return std::make_unique<RandomAgent>(arms); };
  } else if (kind == "oracle") {
    if (!probe.optimal_action(0)) throw ConfigError(spec.path + ".kind", probe.name() + " has no oracle");
    factory = [](std::uint64_t, const EnvPtr& env) { return std::make_unique<OracleAgent>(env); };
  } else {
    throw ConfigError(spec.path + ".kind",
                      "unknown agent '" + kind +
                          "' (linear_ts, neural_linear, lim2, neural_ts, ekf_ts, neural_greedy, random, oracle)");
  }
  p.finish();
  return factory;
}

TrialSpec make_trial_spec(const ExperimentConfig& cfg, const EnvFactory& env, const AgentSpec& agent) {
  const EnvPtr probe = env(cfg.seed);
  if (cfg.horizon <= probe->num_actions() * cfg.pulls_per_arm) {
    throw ConfigError("horizon", "must exceed num_actions x pulls_per_arm = " +
                                     std::to_string(probe->num_actions() * cfg.pulls_per_arm));
  }
  if (cfg.horizon > probe->horizon()) {
    throw ConfigError("horizon", "environment supports at most " + std::to_string(probe->horizon()) + " steps");
  }
  TrialSpec spec;
  spec.make_env = env;
  spec.make_agent = make_agent_factory(agent, *probe);
  spec.horizon = cfg.horizon;
  spec.pulls_per_arm = cfg.pulls_per_arm;
  spec.seed = cfg.seed;
  spec.trials = cfg.trials;
  spec.threads = cfg.threads;
  spec.fingerprint = config_fingerprint(cfg);
  spec.label = agent.label;
  return spec;
}

}  // namespace subkalman::cli
