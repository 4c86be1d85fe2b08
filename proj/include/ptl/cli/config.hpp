#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptl/mcat/trainer.hpp"

namespace ptl::cli {

/// Task family with one scalar per task:
///   mass     -> mass
///   gain     -> gain of action dim 0
///   rotation -> action rotation in degrees
///   crippled -> index of the zeroed action dim, -1 for none
struct TaskSpec {
  std::string family = "mass";
  std::vector<double> train{0.5, 1.0, 1.5, 2.0, 2.5};
  std::vector<double> test{0.3, 2.8};
  std::size_t horizon = 200;
  std::size_t delay_steps = 50;
  double drag = 0.1;
  double dt = 0.05;
  double control_cost = 0.0;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Throws UsageError for an unknown family or a value the family cannot take.
[[nodiscard]] envs::PointMassParams task_params(const TaskSpec& spec, double value);
[[nodiscard]] envs::TaskSet build_task_set(const TaskSpec& spec);

struct ExperimentConfig {
  TaskSpec tasks;
  mcat::McatConfig mcat;  // mcat.tasks is derived from `tasks` on load
  std::string out = "runs/default";
  std::size_t transfer_episodes = 20;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

[[nodiscard]] ExperimentConfig default_config();

/// Sections [run] [tasks] [schedule] [models] [td3] [ablation] [transfer] of
/// `key = value` lines; '#' starts a comment. Missing keys keep their
/// defaults. Throws UsageError naming the offending key on unknown sections,
/// unknown or repeated keys, malformed values, or a config that fails validation.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key, in schema order, with round-trip-exact numbers.
[[nodiscard]] std::string serialize_config(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over the serialized config without run.seed and run.out.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);

}  // namespace ptl::cli
