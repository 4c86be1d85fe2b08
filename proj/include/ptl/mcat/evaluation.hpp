#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ptl/envs/task_set.hpp"
#include "ptl/mcat/learner.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::mcat {

struct EpisodeStats {
  double mean = 0.0;
  double std_error = 0.0;  // s / sqrt(n), 0 for a single episode
  std::vector<double> rewards;
};

[[nodiscard]] EpisodeStats summarize(std::vector<double> rewards);

/// Runs `episodes` episodes of `policy` and summarizes their emitted-reward sums.
[[nodiscard]] EpisodeStats evaluate_policy(const envs::PointMassParams& params, std::size_t horizon,
                                           std::size_t delay_steps, const envs::PolicyFn& policy,
                                           std::size_t episodes, numkit::Rng& rng, std::size_t history_k);

/// Constant full-throttle action of `params`; a hand-made good policy for that task.
[[nodiscard]] envs::PolicyFn throttle_policy(const envs::PointMassParams& params);

/// a = H(s, source(s), z_src, z_tgt) around any source policy.
[[nodiscard]] envs::PolicyFn translated_policy(const Mlp& translator, const models::ModelConfig& cfg,
                                               envs::PolicyFn source, std::vector<double> z_src,
                                               std::vector<double> z_tgt);

}  // namespace ptl::mcat
