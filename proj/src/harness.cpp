#include "subkalman/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace subkalman {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t micros_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

RunTrace online_eval(Agent& agent, const BanditEnv& env, std::size_t horizon, std::size_t warmup_steps,
                     std::uint64_t seed) {
  if (warmup_steps >= horizon) {
    throw HorizonTooShort("horizon " + std::to_string(horizon) + " must exceed the " +
                          std::to_string(warmup_steps) + " warmup steps");
  }
  if (horizon > env.horizon()) {
    throw HorizonTooShort("horizon " + std::to_string(horizon) + " exceeds what " + env.name() +
                          " supports (" + std::to_string(env.horizon()) + ")");
  }
  if (agent.num_actions() != env.num_actions()) {
    throw ShapeError("agent has " + std::to_string(agent.num_actions()) + " actions, environment has " +
                     std::to_string(env.num_actions()));
  }
  RunTrace trace;
  trace.seed = seed;
  trace.agent = agent.name();
  trace.env = env.name();
  trace.warmup_steps = warmup_steps;
  trace.records.reserve(horizon);
  trace.state_hash = fnv1a(nullptr, 0);
  Rng rng(mix_seed(seed, 0xa6e));

  const std::size_t arms = env.num_actions();
  std::vector<Observation> warmup;
  warmup.reserve(warmup_steps);
  auto record = [&](std::size_t t, std::size_t a, double y, std::int64_t us, bool is_warmup) {
    trace.records.push_back({t, a, y, env.optimal_reward(t), us, is_warmup});
    trace.cumulative_reward += y;
    if (!is_warmup) trace.cumulative_reward_post_warmup += y;
  };
  for (std::size_t t = 0; t < warmup_steps; ++t) {
    Vector s = env.state(t);
    trace.state_hash = fnv1a(s.data(), sizeof(double) * static_cast<std::size_t>(s.size()), trace.state_hash);
    const std::size_t a = t % arms;
    const double y = env.reward(t, a);
    record(t, a, y, 0, true);
    warmup.push_back({std::move(s), a, y});
  }
  const auto init_start = Clock::now();
  agent.init_belief(warmup, rng);
  trace.init_micros = micros_since(init_start);

  for (std::size_t t = warmup_steps; t < horizon; ++t) {
    Observation obs;
    obs.state = env.state(t);
    trace.state_hash = fnv1a(obs.state.data(), sizeof(double) * static_cast<std::size_t>(obs.state.size()),
                             trace.state_hash);
    auto start = Clock::now();
    obs.action = agent.choose_action(Step{t, as_span(obs.state)}, rng);
    std::int64_t us = micros_since(start);
    if (obs.action >= arms) throw ActionOutOfRange(agent.name() + " chose " + std::to_string(obs.action));
    obs.reward = env.reward(t, obs.action);
    start = Clock::now();
    agent.update_belief(obs);
    us += micros_since(start);
    record(t, obs.action, obs.reward, us, false);
  }
  return trace;
}

double regret(const RunTrace& trace) {
  double total = 0.0;
  for (const auto& r : trace.records) {
    if (r.warmup) continue;
    if (!r.optimal_reward) throw MissingOracle("step " + std::to_string(r.t) + " has no optimal reward");
    total += *r.optimal_reward - r.reward;
  }
  return total;
}

TimingProfile timing_profile(std::span<const double> t, std::span<const double> micros) {
  if (t.size() != micros.size()) throw ShapeError("timing series differ in length");
  if (t.size() < 10) throw TooFewRecords("need at least 10 timed steps, got " + std::to_string(t.size()));
  const double n = static_cast<double>(t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += micros[i];
  }
  mt /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxx += (t[i] - mt) * (t[i] - mt);
    sxy += (t[i] - mt) * (micros[i] - my);
  }
  TimingProfile out;
  out.samples = t.size();
  out.mean_micros = my;
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = micros[i] - (my + out.slope * (t[i] - mt));
    rss += r * r;
  }
  out.slope_stderr = sxx > 0.0 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return out;
}

TimingProfile timing_profile(const RunTrace& trace) {
  std::vector<double> t, us;
  for (const auto& r : trace.records) {
    if (r.warmup) continue;
    t.push_back(static_cast<double>(r.t));
    us.push_back(static_cast<double>(r.step_micros));
  }
  return timing_profile(t, us);
}

std::size_t default_thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUBKALMAN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  return n;
}

TrialSummary multi_trial(const TrialSpec& spec) {
  if (spec.trials == 0) throw ShapeError("need at least one trial");
  if (!spec.make_agent || !spec.make_env) throw ShapeError("trial spec needs agent and environment factories");
  TrialSummary out;
  out.traces.resize(spec.trials);
  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = spec.seed + i;
    const EnvPtr env = spec.make_env(seed);
    auto agent = spec.make_agent(seed, env);
    const std::size_t warmup = env->num_actions() * spec.pulls_per_arm;
    RunTrace trace = online_eval(*agent, *env, spec.horizon, warmup, seed);
    trace.fingerprint = spec.fingerprint;
    if (!spec.label.empty()) trace.agent = spec.label;
    out.traces[i] = std::move(trace);
  };
  const std::size_t threads = std::min(spec.trials, spec.threads ? spec.threads : default_thread_count());
  if (threads <= 1) {
    for (std::size_t i = 0; i < spec.trials; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < spec.trials; i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  std::vector<double> rewards, regrets;
  bool have_regret = true;
  for (const auto& tr : out.traces) {
    rewards.push_back(tr.cumulative_reward);
    try {
      regrets.push_back(regret(tr));
    } catch (const MissingOracle&) {
      have_regret = false;
    }
  }
  std::tie(out.mean_reward, out.std_reward) = mean_std(rewards);
  if (have_regret) {
    const auto [m, s] = mean_std(regrets);
    out.mean_regret = m;
    out.std_regret = s;
  }
  return out;
}

void write_trace_jsonl(std::ostream& out, const RunTrace& trace, bool timing) {
  for (const auto& r : trace.records) {
    nlohmann::ordered_json j;
    j["t"] = r.t;
    j["a"] = r.action;
    j["y"] = r.reward;
    if (r.optimal_reward) {
      j["opt"] = *r.optimal_reward;
    } else {
      j["opt"] = nullptr;
    }
    j["us"] = timing ? r.step_micros : 0;
    out << j.dump() << '\n';
  }
}

std::string summary_csv_header() {
  return "agent,env,seed,cum_reward,regret,mean_us,slope_us,cum_reward_post_warmup,state_hash";
}

std::string summary_csv_row(const RunTrace& trace, bool timing) {
  std::string regret_field;
  try {
    regret_field = format_double(regret(trace));
  } catch (const MissingOracle&) {
  }
  double mean_us = 0.0, slope_us = 0.0;
  if (timing) {
    try {
      const auto prof = timing_profile(trace);
      mean_us = prof.mean_micros;
      slope_us = prof.slope;
    } catch (const TooFewRecords&) {
    }
  }
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(trace.state_hash));
  return trace.agent + "," + trace.env + "," + std::to_string(trace.seed) + "," +
         format_double(trace.cumulative_reward) + "," + regret_field + "," + format_double(mean_us) + "," +
         format_double(slope_us) + "," + format_double(trace.cumulative_reward_post_warmup) + "," + hash;
}

}  // namespace subkalman
