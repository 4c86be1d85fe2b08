#include "ptl/cli/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "ptl/errors.hpp"

namespace ptl::cli {

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool truncate)
    : out_(path, truncate ? std::ios::trunc : std::ios::app) {
  if (!out_) throw InputError("cannot open metrics file " + path.string());
}

void MetricsWriter::append(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw InputError("failed to write metrics record");
}

std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read metrics file " + path.string());
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
    records.push_back(std::move(rec));
  }
  return records;
}

void truncate_metrics(const std::filesystem::path& path, std::size_t lines) {
  std::vector<std::string> keep;
  {
    std::ifstream in(path);
    std::string line;
    while (keep.size() < lines && std::getline(in, line)) keep.push_back(line);
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
  if (!out) throw InputError("failed to rewrite metrics file " + path.string());
}

std::vector<SeriesPoint> aggregate_series(const std::vector<std::vector<nlohmann::json>>& runs, const std::string& key) {
  std::map<std::uint64_t, std::vector<double>> by_step;
  for (const auto& run : runs)
    for (const auto& rec : run) {
      if (!rec.contains(key) || !rec.contains("global_step")) continue;
      by_step[rec["global_step"].get<std::uint64_t>()].push_back(rec[key].get<double>());
    }
  std::vector<SeriesPoint> series;
  for (const auto& [step, values] : by_step) {
    SeriesPoint p;
    p.step = step;
    p.n = values.size();
    for (double v : values) p.mean += v;
    p.mean /= static_cast<double>(p.n);
    if (p.n > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean) * (v - p.mean);
      p.std_error = std::sqrt(ss / static_cast<double>(p.n - 1)) / std::sqrt(static_cast<double>(p.n));
    }
    series.push_back(p);
  }
  return series;
}

}  // namespace ptl::cli
