#include "ptl/numkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ptl/errors.hpp"

namespace ptl::numkit {

namespace fs = std::filesystem;

namespace {

std::string blob_file_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    out.push_back(ok ? c : '.');
  }
  return out + ".bin";
}

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(bits);
  return bits;
}

}  // namespace

void Checkpoint::put(const std::string& name, DenseArray array) { arrays_[name] = std::move(array); }

void Checkpoint::put_list(const std::string& prefix, const std::vector<DenseArray>& arrays) {
  for (std::size_t k = 0; k < arrays.size(); ++k) put(prefix + "/" + std::to_string(k), arrays[k]);
}

const DenseArray& Checkpoint::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw StateError("checkpoint has no array named '" + name + "'");
  return it->second;
}

std::vector<DenseArray> Checkpoint::get_list(const std::string& prefix, std::size_t count) const {
  std::vector<DenseArray> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(get(prefix + "/" + std::to_string(k)));
  return out;
}

void Checkpoint::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "ptl-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = "f64";
  manifest["byte_order"] = "little-endian";
  manifest["arrays"] = nlohmann::json::array();
  for (const auto& [name, array] : arrays_) {
    const std::string file = blob_file_name(name);
    manifest["arrays"].push_back({{"name", name}, {"shape", array.shape()}, {"file", file}});
    std::vector<std::uint64_t> words(array.size());
    for (std::size_t k = 0; k < array.size(); ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, array.data() + k, sizeof(bits));
      words[k] = to_little_endian(bits);
    }
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 8));
    if (!out) throw InputError("failed to write " + (dir / file).string());
  }
  manifest["meta"] = meta;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(1) << '\n';
  if (!out) throw InputError("failed to write manifest in " + dir.string());
}

Checkpoint Checkpoint::load(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw StateError("no checkpoint manifest at " + manifest_path.string());
  std::ifstream in(manifest_path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("dtype", "") != "f64" || manifest.value("byte_order", "") != "little-endian") {
    throw InputError("unsupported checkpoint dtype/byte order");
  }
  Checkpoint ckpt;
  ckpt.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& entry : manifest.at("arrays")) {
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto file = entry.at("file").get<std::string>();
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    std::vector<std::uint64_t> words(count);
    std::ifstream blob(dir / file, std::ios::binary);
    blob.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 8));
    if (blob.gcount() != static_cast<std::streamsize>(count * 8)) throw InputError("truncated blob " + file);
    std::vector<double> data(count);
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t bits = to_little_endian(words[k]);
      std::memcpy(&data[k], &bits, sizeof(bits));
    }
    ckpt.put(entry.at("name").get<std::string>(), DenseArray(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace ptl::numkit
