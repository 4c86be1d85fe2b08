#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "ptl/envs/task_set.hpp"
#include "ptl/mcat/evaluation.hpp"
#include "ptl/mcat/learner.hpp"
#include "ptl/mcat/selection.hpp"
#include "ptl/rl/buffers.hpp"
#include "ptl/rl/td3.hpp"

namespace ptl::mcat {

struct TrainSchedule {
  std::size_t samples_per_iter = 1000;
  std::size_t cf_steps = 2000;
  std::size_t h_steps = 200;
  std::size_t rl_steps = 1000;
  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;

  /// Throws DomainError unless every field is positive.
  void validate() const;
};

struct McatConfig {
  envs::TaskSet tasks = envs::default_task_set();
  models::ModelConfig model;
  LearnerConfig learner;
  rl::Td3Config td3;
  TrainSchedule schedule;
  std::uint64_t reward_window = 4000;  // G
  std::size_t replay_capacity = 20000;  // per task
  std::size_t sil_capacity = 20000;
  std::size_t random_steps = 1000;  // shared episodes act uniformly at random before this global step
  std::size_t iterations = 20;
  std::size_t eval_episodes = 3;  // per test task, every iteration
  std::size_t checkpoint_every = 10;
  bool pt_enabled = true;
  bool sil_enabled = true;
  std::uint64_t seed = 0;
  friend bool operator==(const McatConfig&, const McatConfig&) = default;

  void validate() const;
  /// Episodes per task per iteration: max(1, round(samples_per_iter / (n_train * horizon))).
  [[nodiscard]] std::size_t episodes_per_task() const;
};

/// Full experiment state of the MCAT loop.
class Trainer {
 public:
  explicit Trainer(McatConfig cfg);

  /// One iteration: collect, SIL update, (C, F), features, H, TD3 + SIL, eviction,
  /// test evaluation. Returns the iteration's metrics record.
  nlohmann::json run_iteration();

  [[nodiscard]] std::size_t iteration() const { return iteration_; }
  [[nodiscard]] std::uint64_t global_step() const { return global_step_; }
  [[nodiscard]] const McatConfig& config() const { return cfg_; }
  [[nodiscard]] const TransferModels& models() const { return models_; }
  [[nodiscard]] const rl::ActorCritic& agent() const { return agent_; }
  [[nodiscard]] const RewardWindows& windows() const { return windows_; }
  [[nodiscard]] const rl::ReplayBuffer& buffer(std::size_t task) const { return buffers_.at(task); }
  [[nodiscard]] const rl::SilBuffer& sil_buffer() const { return sil_; }

  /// Shared policy pi(s, C(window)) without noise.
  [[nodiscard]] envs::PolicyFn shared_policy() const;
  /// pi(s, z_task) without noise; the source policy of task `task`.
  [[nodiscard]] envs::PolicyFn task_policy(std::size_t task) const;

  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  struct Collected {
    std::vector<double> reward_sum;
    std::vector<std::size_t> episodes, shared, transferred;
  };

  Collected collect();
  void run_episode(std::size_t task, Collected& stats);
  [[nodiscard]] std::vector<const rl::ReplayBuffer*> buffer_ptrs() const;

  McatConfig cfg_;
  numkit::Rng init_rng_, collect_rng_, context_rng_, translator_rng_, rl_rng_, feature_rng_;
  TransferModels models_;
  rl::ActorCritic agent_;
  std::vector<rl::ReplayBuffer> buffers_;
  rl::SilBuffer sil_;
  RewardWindows windows_;
  std::vector<envs::PointMassParams> train_params_;
  std::size_t iteration_ = 0;
  std::uint64_t global_step_ = 0;
  std::uint64_t episode_counter_ = 0;
};

}  // namespace ptl::mcat
