#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace ptl::cli {

/// Append-only JSONL file; each record is written as one line and flushed.
class MetricsWriter {
 public:
  /// truncate=false appends to an existing file.
  MetricsWriter(const std::filesystem::path& path, bool truncate);
  void append(const nlohmann::json& record);

 private:
  std::ofstream out_;
};

/// Throws InputError on an unreadable file or a line that is not a JSON object.
[[nodiscard]] std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path);

/// Rewrites `path` keeping only its first `lines` records.
void truncate_metrics(const std::filesystem::path& path, std::size_t lines);

struct SeriesPoint {
  std::uint64_t step = 0;
  double mean = 0.0;
  double std_error = 0.0;  // s / sqrt(n) across runs, 0 when n == 1
  std::size_t n = 0;
};

/// Per global_step mean and standard error of `key` across runs. Steps are the
/// union over runs; each point uses the runs that recorded the key at that step.
[[nodiscard]] std::vector<SeriesPoint> aggregate_series(const std::vector<std::vector<nlohmann::json>>& runs,
                                                        const std::string& key);

}  // namespace ptl::cli
