#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptl/numkit/dense_array.hpp"

namespace ptl::numkit {

/// Named arrays plus free-form JSON metadata, persisted as a directory:
///
///   manifest.json   {"format": "ptl-checkpoint", "version": 1, "dtype": "f64",
///                    "byte_order": "little-endian",
///                    "arrays": [{"name", "shape", "file"}...], "meta": {...}}
///   <file>.bin      raw little-endian IEEE-754 binary64, row-major
///
/// Round trips are bit-exact.
class Checkpoint {
 public:
  void put(const std::string& name, DenseArray array);
  void put_list(const std::string& prefix, const std::vector<DenseArray>& arrays);
  [[nodiscard]] const DenseArray& get(const std::string& name) const;
  [[nodiscard]] std::vector<DenseArray> get_list(const std::string& prefix, std::size_t count) const;
  [[nodiscard]] bool contains(const std::string& name) const { return arrays_.contains(name); }
  [[nodiscard]] const std::map<std::string, DenseArray>& arrays() const noexcept { return arrays_; }

  nlohmann::json meta = nlohmann::json::object();

  /// Writes into `dir` (created if missing; existing files overwritten).
  void save(const std::filesystem::path& dir) const;
  [[nodiscard]] static Checkpoint load(const std::filesystem::path& dir);

 private:
  std::map<std::string, DenseArray> arrays_;
};

}  // namespace ptl::numkit
