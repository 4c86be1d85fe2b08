#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptl/cli/config.hpp"
#include "ptl/tabular/bounds.hpp"

namespace ptl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitBoundViolation = 3;

struct VerifyBoundsOptions {
  std::size_t seeds = 100;
  std::size_t states = 10;
  std::size_t actions = 5;
  std::vector<double> perturbations{0.0, 0.1, 0.5, 1.0};
  tabular::BoundMode mode = tabular::BoundMode::thm1;
  bool identity_bijection = false;
  std::uint64_t base_seed = 0;  // instance k uses seed base_seed + k
};

struct VerifyBoundsSummary {
  std::size_t instances = 0;
  std::size_t satisfied = 0;
  std::vector<tabular::BoundReport> reports;  // perturbation-major, then seed
};

/// Writes one CSV row per instance when csv is non-empty.
VerifyBoundsSummary verify_bounds(const VerifyBoundsOptions& opts, const std::filesystem::path& csv);

struct TrainOptions {
  bool resume = false;
  std::size_t max_iterations = 0;  // 0: run to the configured iteration count
};

/// <out>/config.ini, metrics.jsonl, timing.jsonl and checkpoint/.
/// Resuming truncates metrics.jsonl to the checkpoint's iteration count.
void train(const ExperimentConfig& cfg, const TrainOptions& opts);

struct TransferRow {
  std::size_t source = 0;
  std::size_t target = 0;
  double source_on_target_mean = 0.0, source_on_target_stderr = 0.0;
  double transferred_mean = 0.0, transferred_stderr = 0.0;
  double improvement_pct = 0.0;
};

/// Loads <out>/checkpoint and evaluates every listed (source, target) pair of
/// training tasks. Throws StateError without a checkpoint.
std::vector<TransferRow> transfer_eval(const ExperimentConfig& cfg,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs);
void write_transfer_csv(const std::vector<TransferRow>& rows, const std::filesystem::path& path);

/// One CSV per (key, config hash) under <out_dir>; returns the written paths.
std::vector<std::filesystem::path> plot(const std::vector<std::filesystem::path>& metrics_files,
                                        const std::vector<std::string>& keys, const std::filesystem::path& out_dir);

/// Entry point of the ptl executable; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace ptl::cli
