#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "subkalman/cli.hpp"

namespace subkalman::cli {
namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
  bool timing = false;
  std::string dims;
};

void add_common(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "Experiment config (JSON)")->required();
  cmd.add_option("--seed", o.seed, "Override the base seed");
  cmd.add_option("--trials", o.trials, "Override the number of trials");
  cmd.add_option("--out", o.out, "Override the output directory");
  cmd.add_flag("--timing", o.timing, "Record wall-clock step times in traces and summaries");
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("dims", "expected a comma-separated list of positive integers, got '" + text + "'");
    }
    const auto v = std::stoull(item);
    if (v == 0) throw ConfigError("dims", "dimensions must be positive");
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty()) throw ConfigError("dims", "at least one dimension is required");
  return dims;
}

ExperimentConfig load_with_overrides(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) {
    if (*o.trials == 0) throw ConfigError("trials", "must be at least 1");
    cfg.trials = *o.trials;
  }
  if (!o.out.empty()) cfg.output = o.out;
  if (o.timing) cfg.timing = true;
  if (!o.dims.empty()) cfg.dims = parse_dims(o.dims);
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct AgentResult {
  std::string label;
  TrialSummary summary;
};

std::vector<AgentResult> run_agents(const ExperimentConfig& cfg, const std::vector<AgentSpec>& agents,
                                    std::ostream& out) {
  const EnvFactory env = make_env_factory(cfg);
  std::vector<TrialSpec> specs;
  for (const auto& a : agents) specs.push_back(make_trial_spec(cfg, env, a));
  std::vector<AgentResult> results;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    AgentResult r{agents[i].label, multi_trial(specs[i])};
    out << r.label << ": cum_reward " << fmt(r.summary.mean_reward) << " +/- " << fmt(r.summary.std_reward);
    if (r.summary.mean_regret) {
      out << ", regret " << fmt(*r.summary.mean_regret) << " +/- " << fmt(*r.summary.std_regret);
    }
    out << " over " << cfg.trials << " trial" << (cfg.trials == 1 ? "" : "s") << '\n';
    results.push_back(std::move(r));
  }
  return results;
}

void write_results(const ExperimentConfig& cfg, const std::vector<AgentResult>& results, bool traces) {
  const fs::path dir(cfg.output);
  std::string csv = summary_csv_header() + "\n";
  for (const auto& r : results) {
    for (const auto& tr : r.summary.traces) csv += summary_csv_row(tr, cfg.timing) + "\n";
  }
  if (traces) {
    fs::create_directories(dir / "traces");
    for (const auto& r : results) {
      for (const auto& tr : r.summary.traces) {
        std::ostringstream s;
        write_trace_jsonl(s, tr, cfg.timing);
        write_file(dir / "traces" / (r.label + "_seed" + std::to_string(tr.seed) + ".jsonl"), s.str());
      }
    }
  }
  write_file(dir / "summary.csv", csv);
}

int cmd_run(const Overrides& o, bool compare, std::ostream& out) {
  const ExperimentConfig cfg = load_with_overrides(o);
  if (compare && cfg.agents.size() < 2) throw ConfigError("agents", "compare needs at least two agents");
  const auto results = run_agents(cfg, cfg.agents, out);
  fs::create_directories(cfg.output);
  write_results(cfg, results, true);
  if (compare) {
    std::vector<BarSeries> bars;
    for (const auto& r : results) bars.push_back({r.label, r.summary.mean_reward, r.summary.std_reward});
    const std::string env = results.front().summary.traces.front().env;
    write_file(fs::path(cfg.output) / "compare.svg",
               svg_bar_chart("Cumulative reward on " + env, "cumulative reward", bars));
  }
  out << "wrote " << cfg.output << '\n';
  return kOk;
}

int cmd_sweep(const Overrides& o, std::ostream& out) {
  const ExperimentConfig cfg = load_with_overrides(o);
  if (cfg.agents.size() != 1) throw ConfigError("agents", "sweep-dim takes exactly one agent");
  const AgentSpec& base = cfg.agents.front();
  if (base.kind != "ekf_ts") throw ConfigError(base.path + ".kind", "sweep-dim needs an ekf_ts agent");
  const std::string mode = base.params.value("mode", std::string("subspace_full"));
  if (mode != "subspace_full" && mode != "subspace_diag") {
    throw ConfigError(base.path + ".mode", "sweep-dim needs a subspace mode");
  }
  if (cfg.dims.empty()) throw ConfigError("dims", "give --dims or a dims array in the config");

  const char* kinds[] = {"svd", "random"};
  std::vector<AgentSpec> agents;
  for (auto d : cfg.dims) {
    for (const char* kind : kinds) {
      AgentSpec s = base;
      s.params["dim"] = d;
      s.params["subspace"] = kind;
      s.label = std::string(kind) + "_d" + std::to_string(d);
      agents.push_back(std::move(s));
    }
  }
  const auto results = run_agents(cfg, agents, out);
  fs::create_directories(cfg.output);
  write_results(cfg, results, false);

  std::string csv = "d,kind,mean,std\n";
  std::vector<LineSeries> lines{{"svd", {}, {}}, {"random", {}, {}}};
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::size_t d = cfg.dims[i / 2];
    const auto& s = results[i].summary;
    char row[128];
    std::snprintf(row, sizeof row, "%zu,%s,%.12g,%.12g\n", d, kinds[i % 2], s.mean_reward, s.std_reward);
    csv += row;
    lines[i % 2].x.push_back(static_cast<double>(d));
    lines[i % 2].y.push_back(s.mean_reward);
  }
  write_file(fs::path(cfg.output) / "sweep.csv", csv);
  write_file(fs::path(cfg.output) / "sweep.svg",
             svg_line_chart("Reward vs subspace dimension", "subspace dimension d", "mean cumulative reward", lines));
  out << "wrote " << cfg.output << '\n';
  return kOk;
}

int cmd_ingest(const std::string& kind, const std::string& path, std::size_t movies, std::size_t rank,
               std::ostream& out) {
  if (kind == "csv") {
    const auto data = load_csv_dataset(path);
    out << path << ": " << data.rows() << " rows, " << data.cols() << " feature columns, " << data.num_classes
        << " classes\n";
  } else {
    const auto ratings = load_movielens(path);
    std::size_t users = 0, items = 0;
    for (const auto& r : ratings) {
      users = std::max(users, r.user);
      items = std::max(items, r.item);
    }
    out << path << ": " << ratings.size() << " ratings, " << users << " users, " << items << " items\n";
    const auto sim = build_movielens(ratings, movies, rank);
    out << "simulator: " << sim.users() << " users x " << sim.movies() << " movies, rank " << rank
        << ", relative reconstruction error " << fmt(sim.reconstruction_error()) << '\n';
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online Bayesian inference for neural contextual bandits"};
  app.name("subkalman");
  app.require_subcommand(1);

  Overrides run_o, compare_o, sweep_o;
  auto* run = app.add_subcommand("run", "Run every configured agent and write traces plus summary.csv");
  add_common(*run, run_o);
  auto* compare = app.add_subcommand("compare", "Run two or more agents on shared seeds and chart them");
  add_common(*compare, compare_o);
  auto* sweep = app.add_subcommand("sweep-dim", "Sweep the subspace dimension for SVD and random subspaces");
  add_common(*sweep, sweep_o);
  sweep->add_option("--dims", sweep_o.dims, "Comma-separated subspace dimensions, e.g. 10,50,100");

  std::string ingest_kind = "csv", ingest_path;
  std::size_t ingest_movies = 20, ingest_rank = 20;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and report its size");
  ingest->add_option("--kind", ingest_kind, "csv or movielens")->check(CLI::IsMember({"csv", "movielens"}));
  ingest->add_option("path", ingest_path, "Dataset file")->required();
  ingest->add_option("--num-movies", ingest_movies, "MovieLens: movies kept as arms");
  ingest->add_option("--rank", ingest_rank, "MovieLens: SVD rank");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*run) return cmd_run(run_o, false, out);
    if (*compare) return cmd_run(compare_o, true, out);
    if (*sweep) return cmd_sweep(sweep_o, out);
    return cmd_ingest(ingest_kind, ingest_path, ingest_movies, ingest_rank, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const HorizonTooShort& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const EmptyDataset& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const LabelOutOfRange& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const RankError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace subkalman::cli
