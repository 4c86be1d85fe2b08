#include "ptl/envs/task_set.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ptl/errors.hpp"
#include "ptl/models/history.hpp"

namespace ptl::envs {

void TaskSet::validate() const {
  if (train_params.empty()) throw DomainError("task set needs at least one training task");
  if (horizon == 0 || delay_steps == 0) throw DomainError("horizon and delay_steps must be positive");
  for (const auto& p : train_params) p.validate();
  for (const auto& p : test_params) {
    p.validate();
    for (const auto& q : train_params)
      if (p == q) throw DomainError("test task duplicates a training task: " + p.describe());
  }
}

TaskSet default_task_set() {
  TaskSet set;
  set.family = "mass";
  for (double m : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    PointMassParams p;
    p.mass = m;
    set.train_params.push_back(p);
  }
  for (double m : {0.3, 2.8}) {
    PointMassParams p;
    p.mass = m;
    set.test_params.push_back(p);
  }
  return set;
}

TaskEnv::TaskEnv(const PointMassParams& params, std::size_t horizon, std::size_t delay_steps)
    : inner_(std::make_unique<PointMassEnv>(params, horizon)) {
  if (delay_steps > 1) delayed_ = std::make_unique<DelayedRewardWrapper>(*inner_, delay_steps);
}

double EpisodeTrace::episode_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

EpisodeTrace rollout(Environment& env, const PolicyFn& policy, std::size_t horizon, numkit::Rng& rng,
                     std::size_t history_k) {
  auto* delayed = dynamic_cast<DelayedRewardWrapper*>(&env);
  models::HistoryWindow window(history_k, kStateDim, kActionDim);
  EpisodeTrace trace;
  EnvState state = env.reset(rng);
  trace.observations.push_back(state.observation());
  const std::size_t steps = std::min(horizon, env.horizon());
  for (std::size_t t = 0; t < steps; ++t) {
    auto history = window.flat();
    const Observation obs = state.observation();
    const Action action = policy(obs, history);
    for (double v : action)
      if (!std::isfinite(v)) throw InputError("policy produced a non-finite action");
    StepResult result = env.step(state, action);
    const Observation next_obs = result.next.observation();
    window.push(obs, action, next_obs);
    trace.actions.push_back(action);
    trace.rewards.push_back(result.reward);
    trace.dense_rewards.push_back(delayed ? delayed->last_dense_reward() : result.reward);
    trace.histories.push_back(std::move(history));
    trace.observations.push_back(next_obs);
    const bool done = result.done || t + 1 == steps;
    trace.dones.push_back(done);
    state = result.next;
    if (result.done) break;
  }
  return trace;
}

void write_trace_jsonl(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t t = 0; t < trace.length(); ++t) {
    nlohmann::json line = {{"t", t},
                           {"obs", trace.observations[t]},
                           {"action", trace.actions[t]},
                           {"reward", trace.rewards[t]},
                           {"dense_reward", trace.dense_rewards[t]},
                           {"next_obs", trace.observations[t + 1]},
                           {"done", static_cast<bool>(trace.dones[t])}};
    out << line.dump() << '\n';
  }
}

}  // namespace ptl::envs
