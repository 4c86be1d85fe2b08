#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ptl/envs/point_mass.hpp"

namespace ptl::envs {

struct TaskSet {
  std::string family = "mass";
  std::vector<PointMassParams> train_params;
  std::vector<PointMassParams> test_params;
  std::size_t horizon = 200;
  std::size_t delay_steps = 50;
  friend bool operator==(const TaskSet&, const TaskSet&) = default;

  /// Throws DomainError on invalid params or overlap between train and test.
  void validate() const;
  [[nodiscard]] std::size_t n_train() const { return train_params.size(); }
};

/// Five training masses {0.5 .. 2.5} and test masses {0.3, 2.8}.
[[nodiscard]] TaskSet default_task_set();

/// A point mass plus its delayed-reward wrapper, owned together.
class TaskEnv {
 public:
  TaskEnv(const PointMassParams& params, std::size_t horizon, std::size_t delay_steps);
  TaskEnv(const TaskEnv&) = delete;
  TaskEnv& operator=(const TaskEnv&) = delete;

  [[nodiscard]] Environment& env() { return delayed_ ? static_cast<Environment&>(*delayed_) : *inner_; }
  [[nodiscard]] PointMassEnv& inner() { return *inner_; }

 private:
  std::unique_ptr<PointMassEnv> inner_;
  std::unique_ptr<DelayedRewardWrapper> delayed_;
};

/// policy(observation, history window) -> action
using PolicyFn = std::function<Action(const Observation&, std::span<const double>)>;

struct EpisodeTrace {
  std::vector<Observation> observations;  // T + 1 entries
  std::vector<Action> actions;            // as emitted by the policy, before clamping
  std::vector<double> rewards;            // emitted (possibly delayed)
  std::vector<double> dense_rewards;      // undelayed; equals rewards for a raw env
  std::vector<std::vector<double>> histories;  // window seen before each action
  std::vector<bool> dones;

  [[nodiscard]] std::size_t length() const { return actions.size(); }
  [[nodiscard]] double episode_reward() const;
};

/// Runs one episode. K sets the history window length handed to the policy.
/// Throws InputError if the policy returns a non-finite action.
EpisodeTrace rollout(Environment& env, const PolicyFn& policy, std::size_t horizon, numkit::Rng& rng,
                     std::size_t history_k = 10);

/// One JSON object per step.
void write_trace_jsonl(const EpisodeTrace& trace, const std::filesystem::path& path);

}  // namespace ptl::envs
