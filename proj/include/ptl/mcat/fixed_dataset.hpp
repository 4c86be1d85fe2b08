#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ptl/mcat/evaluation.hpp"
#include "ptl/mcat/learner.hpp"
#include "ptl/rl/buffers.hpp"

namespace ptl::mcat {

struct FixedDatasetConfig {
  FixedDatasetConfig() { learner.translator_lr = 1e-3; }

  models::ModelConfig model;
  LearnerConfig learner;
  std::size_t horizon = 200;
  std::size_t delay_steps = 1;
  std::size_t dataset_episodes = 20;  // per task
  double behavior_noise = 0.3;
  std::size_t cf_steps = 4000;
  std::size_t h_steps = 3000;
  std::size_t eval_episodes = 100;
  std::uint64_t seed = 0;
};

/// Offline data on one task. Each episode holds a random constant action
/// drawn uniformly from [-1, 1]^2 plus Gaussian noise, so the data covers
/// the whole range of velocities the task can reach.
[[nodiscard]] rl::ReplayBuffer collect_dataset(const envs::PointMassParams& params, const FixedDatasetConfig& cfg,
                                               numkit::Rng& rng);

/// Trains C, F then H on the given datasets (buffer index = task label).
void fit_transfer_models(TransferModels& models, const std::vector<const rl::ReplayBuffer*>& datasets,
                         const FixedDatasetConfig& cfg, numkit::Rng& rng);

struct TransferReport {
  EpisodeStats source_on_source;
  EpisodeStats source_on_target;
  EpisodeStats transferred_on_target;
};

/// Source policy frozen; C, F trained on both datasets, H on L_trans; each
/// policy evaluated over eval_episodes. Throws InputError when a dataset's
/// dimensions do not match the model config.
[[nodiscard]] TransferReport fixed_dataset_transfer(const rl::ReplayBuffer& source_data,
                                                    const rl::ReplayBuffer& target_data,
                                                    const envs::PointMassParams& source,
                                                    const envs::PointMassParams& target,
                                                    const envs::PolicyFn& source_policy,
                                                    const FixedDatasetConfig& cfg);

struct TransferMatrix {
  // [source][target]
  std::vector<std::vector<double>> source_on_target;
  std::vector<std::vector<double>> transferred;
  std::vector<std::vector<double>> improvement;  // percent
};

/// 100 (transferred - source) / |source| for every ordered pair, diagonal included.
[[nodiscard]] TransferMatrix transfer_matrix(const TransferModels& models, const std::vector<envs::PointMassParams>& tasks,
                                             const std::function<envs::PolicyFn(std::size_t)>& source_policy,
                                             std::size_t horizon, std::size_t delay_steps, std::size_t episodes,
                                             numkit::Rng& rng);

/// Datasets for every task, fitted models, then transfer_matrix with scripted throttle sources.
[[nodiscard]] TransferMatrix fixed_dataset_matrix(const std::vector<envs::PointMassParams>& tasks,
                                                  const FixedDatasetConfig& cfg);

}  // namespace ptl::mcat
