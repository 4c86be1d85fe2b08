#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ptl::numkit {

/// Deterministic random stream.
///
/// A (seed, stream_id) pair fully determines the sequence; distinct stream ids
/// under one seed give independent-looking sequences. Gaussians use Box-Muller
/// without a cached spare, so the engine state is the complete stream state and
/// can be persisted with state()/set_state().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  std::uint64_t next_u64() { return engine_(); }

  /// First `count` entries of a uniform random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);
  std::vector<std::size_t> permutation(std::size_t n) { return sample_without_replacement(n, n); }

  [[nodiscard]] std::string state() const;
  void set_state(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives the seed of an independent sub-stream (SplitMix64 mixing).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

inline Rng seeded_rng(std::uint64_t seed, std::uint64_t stream_id = 0) { return Rng(seed, stream_id); }

}  // namespace ptl::numkit
