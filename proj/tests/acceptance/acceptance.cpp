// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 unless --strict is
// given and a criterion fails, so that ctest records the report without hiding it.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "subkalman/cli.hpp"

using namespace subkalman;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

Matrix random_spd(std::size_t n, Rng& rng) {
  Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return g * g.transpose() / static_cast<double>(n) + Matrix::Identity(g.rows(), g.cols());
}

std::size_t uniform_int(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double max_abs(const Matrix& a, const Matrix& b) { return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff(); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string mean_std(const TrialSummary& s) { return num(s.mean_reward) + "+/-" + num(s.std_reward); }

// ---------------------------------------------------------------------------

Verdict check_linear_posterior() {
  Rng rng(101);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = uniform_int(1, 8, rng);
    const std::size_t count = uniform_int(1, 32, rng);
    const double noise = 0.1 + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const GaussianBelief prior{random_vector(n, rng), random_spd(n, rng)};
    Matrix x(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
    Vector y(static_cast<Eigen::Index>(count));
    GaussianBelief rls = prior, sm = prior;
    for (std::size_t i = 0; i < count; ++i) {
      const Vector xi = random_vector(n, rng);
      const double yi = random_vector(1, rng)[0];
      x.row(static_cast<Eigen::Index>(i)) = xi.transpose();
      y[static_cast<Eigen::Index>(i)] = yi;
      rls = rls_step(rls, xi, yi, noise);
      sm = sherman_morrison_step(sm, xi, yi, noise);
    }
    const auto batch = batch_posterior_known_var(prior, x, y, noise);
    worst = std::max({worst, max_abs(rls.mean, batch.mean), max_abs(rls.cov, batch.cov),
                      max_abs(sm.mean, batch.mean), max_abs(sm.cov, batch.cov)});
  }
  return {worst <= 1e-8, "max abs diff " + num(worst) + " over 200 instances"};
}

Verdict check_nig_equivalence() {
  Rng rng(202);
  double worst_nig = 0.0, worst_kf = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = uniform_int(1, 8, rng);
    const std::size_t count = uniform_int(1, 32, rng);
    NigBelief prior{random_vector(n, rng), random_spd(n, rng), 1.0 + uniform_int(0, 5, rng), 0.5 + uniform_int(0, 4, rng)};
    Matrix x(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
    Vector y(static_cast<Eigen::Index>(count));
    NigBelief nig = prior;
    VarKfBelief kf{prior.mean, prior.cov, 2.0 * prior.a, prior.b / prior.a};
    for (std::size_t i = 0; i < count; ++i) {
      const Vector xi = random_vector(n, rng);
      const double yi = random_vector(1, rng)[0];
      x.row(static_cast<Eigen::Index>(i)) = xi.transpose();
      y[static_cast<Eigen::Index>(i)] = yi;
      nig = nig_step(nig, xi, yi);
      kf = varkf_step(kf, xi, yi);
    }
    const auto batch = nig_batch(prior, x, y);
    worst_nig = std::max({worst_nig, max_abs(nig.mean, batch.mean), max_abs(nig.cov, batch.cov),
                          std::abs(nig.a - batch.a), std::abs(nig.b - batch.b)});
    worst_kf = std::max({worst_kf, max_abs(kf.mean, nig.mean), max_abs(kf.cov, nig.cov),
                         std::abs(kf.nu / 2.0 - nig.a), std::abs(kf.nu * kf.tau / 2.0 - nig.b)});
  }
  return {worst_nig <= 1e-8 && worst_kf <= 1e-7,
          "NIG step vs batch " + num(worst_nig) + ", variance-KF vs NIG " + num(worst_kf)};
}

Verdict check_ekf_is_kalman() {
  Rng rng(303);
  const EkfNoise noise{0.5, 0.0};
  double worst = 0.0;
  const std::size_t n = 6;
  EkfBelief ekf = full_belief(random_vector(n, rng), 1.0);
  std::get<FullCov>(ekf.cov).cov = random_spd(n, rng);
  GaussianBelief rls{ekf.mean, ekf.dense_cov()};
  for (int step = 0; step < 500; ++step) {
    const Vector x = random_vector(n, rng);
    const double y = random_vector(1, rng)[0];
    ekf = ekf_step(ekf, Linearization{x.dot(ekf.mean), x}, y, noise);
    rls = rls_step(rls, x, y, noise.obs_var);
    worst = std::max({worst, max_abs(ekf.mean, rls.mean), max_abs(ekf.dense_cov(), rls.cov)});
  }
  return {worst <= 1e-10, "max abs diff " + num(worst) + " over 500 steps"};
}

Verdict check_jacobian() {
  Rng rng(404);
  const HeadMode heads[] = {HeadMode::MultiHead, HeadMode::Concat, HeadMode::OneHotBlock};
  const std::vector<std::size_t> hiddens[] = {{}, {7}, {6, 5}};
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    MlpArchitecture arch;
    arch.state_dim = 4;
    arch.num_actions = 3;
    arch.head = heads[probe % 3];
    arch.hidden = hiddens[(probe / 3) % 3];
    const ParamVector theta = random_vector(param_count(arch), rng);
    const Vector s = random_vector(4, rng);
    const std::size_t a = uniform_int(0, 2, rng);
    const Vector g = grad_params(arch, theta, as_span(s), a);
    const double h = 1e-5;
    Vector fd(g.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      ParamVector up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      fd[i] = (forward(arch, up, as_span(s), a) - forward(arch, down, as_span(s), a)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return {worst < 1e-5, "max relative error " + num(worst) + " over 100 probes"};
}

Verdict check_identity_subspace() {
  const SyntheticNonlinearEnv env(4, 3, {8}, 0.2, 5);
  EkfTsConfig cfg;
  cfg.arch.state_dim = 4;
  cfg.arch.num_actions = 3;
  cfg.arch.hidden = {8};
  cfg.sgd.epochs = 5;
  cfg.seed = 7;
  cfg.mode = EkfMode::SubspaceFull;
  cfg.kind = SubspaceKind::Identity;
  EkfTsAgent sub(cfg);
  cfg.mode = EkfMode::FullSpace;
  EkfTsAgent full(cfg);
  const auto a = online_eval(sub, env, 200, 15, 3);
  const auto b = online_eval(full, env, 200, 15, 3);
  std::size_t mismatched = 0;
  for (std::size_t t = 0; t < 200; ++t) mismatched += a.records[t].action != b.records[t].action;
  const double mean_diff = max_abs(sub.mean_params(), full.mean_params());
  const double cov_diff = max_abs(sub.belief().dense_cov(), full.belief().dense_cov());
  return {mismatched == 0 && mean_diff <= 1e-9 && cov_diff <= 1e-9,
          std::to_string(mismatched) + " differing actions, mean diff " + num(mean_diff) + ", cov diff " +
              num(cov_diff)};
}

Verdict check_pgd_properties() {
  Rng rng(606);
  double min_eig = std::numeric_limits<double>::infinity();
  std::size_t increases = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const Matrix a0 = random_spd(4, rng);
    std::vector<Vector> feats;
    std::vector<double> targets;
    for (int j = 0; j < 8; ++j) {
      feats.push_back(random_vector(4, rng));
      targets.push_back(std::abs(random_vector(1, rng)[0]) * 4.0);
    }
    PgdResult cur{a0, 0.0, 0.0};
    for (int step = 0; step < 25; ++step) {
      const auto next = pgd_psd_project(cur.matrix, feats, targets, 1, 1e-3);
      if (next.objective_after > next.objective_before * (1.0 + 1e-12)) ++increases;
      min_eig = std::min(min_eig, min_eigenvalue(next.matrix));
      cur = next;
    }
  }
  return {min_eig >= -1e-10 && increases == 0,
          "min eigenvalue " + num(min_eig) + ", " + std::to_string(increases) + " objective increases in 2500 steps"};
}

// Runs every agent of a config through the same path as the command-line tool.
std::vector<TrialSummary> run_config(const json& doc) {
  const auto cfg = cli::parse_config(doc);
  const auto env = cli::make_env_factory(cfg);
  std::vector<TrialSummary> out;
  for (const auto& a : cfg.agents) out.push_back(multi_trial(cli::make_trial_spec(cfg, env, a)));
  return out;
}

Verdict check_regret_trend() {
  const json doc = {{"version", 1},
                    {"seed", 0},
                    {"trials", 10},
                    {"horizon", 2000},
                    {"env", {{"kind", "synthetic_linear"}, {"state_dim", 8}, {"num_actions", 4}, {"noise_std", 0.1}}},
                    {"agents", json::array({{{"kind", "linear_ts"}}, {{"kind", "random"}}})}};
  const auto res = run_config(doc);
  const double ts = *res[0].mean_regret, rnd = *res[1].mean_regret;
  return {ts < 0.4 * rnd, "linear_ts regret " + num(ts) + " vs random " + num(rnd) + " (ratio " + num(ts / rnd) + ")"};
}

json classification_config(json agents) {
  return {{"version", 1},
          {"seed", 0},
          {"trials", 10},
          {"horizon", 3000},
          {"pulls_per_arm", 20},
          {"env", {{"kind", "synthetic_classification"}, {"state_dim", 9}, {"num_actions", 7}}},
          {"agents", std::move(agents)}};
}

Verdict check_subspace_vs_diag() {
  const auto res = run_config(classification_config(json::array(
      {{{"kind", "ekf_ts"}, {"label", "subspace"}, {"mode", "subspace_full"}, {"subspace", "svd"}, {"dim", 50}, {"hidden", {50}}},
       {{"kind", "ekf_ts"}, {"label", "diag"}, {"mode", "diag"}, {"hidden", {50}}}})));
  const double pooled = std::sqrt((res[0].std_reward * res[0].std_reward + res[1].std_reward * res[1].std_reward) / 2.0);
  return {res[0].mean_reward >= res[1].mean_reward - pooled,
          "subspace d=50 " + mean_std(res[0]) + " vs diagonal full space " + mean_std(res[1])};
}

Verdict check_svd_vs_random() {
  const auto res = run_config(classification_config(json::array(
      {{{"kind", "ekf_ts"}, {"label", "svd"}, {"subspace", "svd"}, {"dim", 10}, {"hidden", {50}}},
       {{"kind", "ekf_ts"}, {"label", "random"}, {"subspace", "random"}, {"dim", 10}, {"hidden", {50}}}})));
  return {res[0].mean_reward >= res[1].mean_reward,
          "svd d=10 " + mean_std(res[0]) + " vs random d=10 " + mean_std(res[1])};
}

Verdict check_constant_memory() {
  json doc = classification_config(json::array(
      {{{"kind", "ekf_ts"}, {"label", "ekf"}, {"mode", "subspace_full"}, {"hidden", {50}}},
       {{"kind", "neural_linear"}, {"label", "nl"}, {"update_period", 100}, {"hidden", {50}}}}));
  doc["trials"] = 1;
  doc["horizon"] = 2000;
  doc["timing"] = true;
  const auto res = run_config(doc);
  const auto ekf = timing_profile(res[0].traces[0]);
  const auto nl = timing_profile(res[1].traces[0]);
  // Slope per step against the mean per-step time. The drift of the fitted line over the
  // whole run is reported too; on a shared machine it mostly reflects scheduler noise.
  const bool ekf_flat = ekf.slope <= 0.05 * ekf.mean_micros;
  const double drift = ekf.slope * static_cast<double>(ekf.samples);
  const double ekf_z = ekf.slope_stderr > 0.0 ? ekf.slope / ekf.slope_stderr : 0.0;
  const double z = nl.slope_stderr > 0.0 ? nl.slope / nl.slope_stderr : 0.0;
  const bool nl_grows = nl.slope > 0.0 && z > 1.645;
  return {ekf_flat && nl_grows,
          "ekf mean " + num(ekf.mean_micros) + " us, slope " + num(ekf.slope) + " us/step (z " + num(ekf_z) +
              ", drift " + num(drift) + " us over the run)"
              "; neural-linear slope " + num(nl.slope) + " us/step, z " + num(z)};
}

Verdict check_bookkeeping(const std::string& movielens) {
  MlpArchitecture arch;
  arch.state_dim = 784;
  arch.hidden = {50};
  arch.num_actions = 10;
  const auto count = param_count(arch);
  if (movielens.empty()) return {false, "param_count " + std::to_string(count) + "; no MovieLens file given"};
  const auto ratings = load_movielens(movielens);
  const auto sim = build_movielens(ratings, 20, 20);
  const double err = sim.reconstruction_error();
  return {count == 39760 && ratings.size() == 100000 && err <= 1e-8,
          "param_count " + std::to_string(count) + ", " + std::to_string(ratings.size()) +
              " ratings, reconstruction error " + num(err) + " at K=20"};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict check_determinism() {
  const fs::path root = fs::temp_directory_path() / ("subkalman_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const json doc = {{"version", 1},
                    {"seed", 42},
                    {"trials", 4},
                    {"horizon", 300},
                    {"pulls_per_arm", 5},
                    {"env", {{"kind", "synthetic_nonlinear"}, {"state_dim", 4}, {"num_actions", 3}}},
                    {"agents", json::array({{{"kind", "linear_ts"}},
                                            {{"kind", "neural_linear"}, {"hidden", {16}}, {"update_period", 50}},
                                            {{"kind", "lim2"}, {"hidden", {16}}, {"memory", 64}},
                                            {{"kind", "neural_ts"}, {"hidden", {16}}, {"update_period", 50}},
                                            {{"kind", "ekf_ts"}, {"hidden", {16}}, {"dim", 20}},
                                            {{"kind", "ekf_ts"}, {"label", "ekf_diag"}, {"mode", "diag"}, {"hidden", {16}}},
                                            {{"kind", "neural_greedy"}, {"hidden", {16}}},
                                            {{"kind", "random"}}})}};
  {
    std::ofstream(root / "config.json") << doc.dump(2);
  }
  std::ostringstream sink;
  auto run_with = [&](const std::string& out, const char* threads) {
    ::setenv("SUBKALMAN_THREADS", threads, 1);
    const int code = cli::run_cli({"run", "--config", (root / "config.json").string(), "--out", (root / out).string()},
                                  sink, sink);
    ::unsetenv("SUBKALMAN_THREADS");
    return code;
  };
  const int codes = run_with("a", "1") + run_with("b", "1") + run_with("c", "4");
  std::size_t files = 0, differing = 0;
  if (codes == 0) {
    for (const auto& entry : fs::directory_iterator(root / "a" / "traces")) {
      ++files;
      const auto name = entry.path().filename();
      const auto text = read_all(entry.path());
      if (text.empty() || text != read_all(root / "b" / "traces" / name) ||
          text != read_all(root / "c" / "traces" / name)) {
        ++differing;
      }
    }
  }
  fs::remove_all(root);
  return {codes == 0 && files == 32 && differing == 0,
          std::to_string(files) + " traces compared across two serial runs and one 4-thread run, " +
              std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string movielens;
  bool strict = false;
  std::vector<int> only;
  app.add_option("--movielens", movielens, "Path to the MovieLens 100k u.data file");
  app.add_flag("--strict", strict, "Exit non-zero when any criterion fails");
  app.add_option("--only", only, "Run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "linear_posterior_equivalence", 1, check_linear_posterior},
      {2, "nig_equivalence", 1, check_nig_equivalence},
      {3, "ekf_reduces_to_kalman", 1, check_ekf_is_kalman},
      {4, "jacobian_correctness", 10, check_jacobian},
      {5, "identity_subspace_equivalence", 30, check_identity_subspace},
      {6, "pgd_properties", 5, check_pgd_properties},
      {7, "regret_trend", 60, check_regret_trend},
      {8, "subspace_beats_diagonal", 600, check_subspace_vs_diag},
      {9, "svd_beats_random_low_d", 600, check_svd_vs_random},
      {10, "constant_memory_timing", 600, check_constant_memory},
      {11, "bookkeeping_exactness", 60, [&] { return check_bookkeeping(movielens); }},
      {12, "determinism", 120, check_determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      v.pass = false;
      v.detail += "; over the " + num(c.budget_seconds) + " s budget";
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.id << ' ' << c.name << " (" << num(secs) << " s): " << v.detail
              << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return strict && failures > 0 ? 1 : 0;
}
