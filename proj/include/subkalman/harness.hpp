#pragma once

// Online evaluation: round-robin warmup, then choose / reward / update for the
// remaining steps. Agent time (choose + update) is measured per step.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subkalman/agents.hpp"
#include "subkalman/environments.hpp"

namespace subkalman {

struct StepRecord {
  std::size_t t = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::optional<double> optimal_reward;
  std::int64_t step_micros = 0;  // 0 during warmup
  bool warmup = false;
};

struct RunTrace {
  std::vector<StepRecord> records;
  double cumulative_reward = 0.0;              // all steps, warmup included
  double cumulative_reward_post_warmup = 0.0;
  std::size_t warmup_steps = 0;
  std::int64_t init_micros = 0;                // agent.init_belief
  std::uint64_t state_hash = 0;                // FNV-1a over every state seen
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string agent;
  std::string env;
};

// Runs T steps of which the first `warmup_steps` pull arms round-robin.
// Throws HorizonTooShort unless warmup_steps < T <= env.horizon().
RunTrace online_eval(Agent& agent, const BanditEnv& env, std::size_t horizon,
                     std::size_t warmup_steps, std::uint64_t seed);

// Sum over post-warmup steps of optimal minus obtained reward. Throws MissingOracle.
double regret(const RunTrace& trace);

struct TimingProfile {
  double mean_micros = 0.0;
  double slope = 0.0;         // micros per step, ordinary least squares on t
  double slope_stderr = 0.0;
  std::size_t samples = 0;
};
// Post-warmup steps only. Throws TooFewRecords below 10 of them.
TimingProfile timing_profile(const RunTrace& trace);
TimingProfile timing_profile(std::span<const double> t, std::span<const double> micros);

struct TrialSpec {
  std::function<std::unique_ptr<Agent>(std::uint64_t seed, const EnvPtr& env)> make_agent;
  std::function<EnvPtr(std::uint64_t seed)> make_env;
  std::size_t horizon = 0;
  std::size_t pulls_per_arm = 1;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  // 0 means SUBKALMAN_THREADS, or the hardware concurrency when that is unset.
  std::size_t threads = 0;
  std::string fingerprint;
  std::string label;  // replaces the agent name in traces when set
};

struct TrialSummary {
  double mean_reward = 0.0;
  double std_reward = 0.0;  // sample std, 0 for a single trial
  std::optional<double> mean_regret;
  std::optional<double> std_regret;
  std::vector<RunTrace> traces;
};

// Trial i uses seed + i for both agent and environment. Results do not depend
// on the thread count.
TrialSummary multi_trial(const TrialSpec& spec);

std::size_t default_thread_count();

// One JSON object per line: {"t","a","y","opt","us"}. With timing off every "us" is 0,
// which makes traces byte-reproducible.
void write_trace_jsonl(std::ostream& out, const RunTrace& trace, bool timing);

std::string summary_csv_header();
std::string summary_csv_row(const RunTrace& trace, bool timing);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace subkalman
