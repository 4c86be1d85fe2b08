#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptl/models/context.hpp"
#include "ptl/numkit/checkpoint.hpp"
#include "ptl/numkit/dense_array.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::rl {

using numkit::DenseArray;

struct TransitionRecord {
  std::span<const double> state;
  std::span<const double> action;
  double reward = 0.0;
  std::span<const double> next_state;
  std::span<const double> window;  // history before `action`
  std::size_t task = 0;
  std::uint64_t episode = 0;
  std::size_t step = 0;  // index within the episode
};

/// Columns gathered for a minibatch.
struct ReplaySample {
  DenseArray states;
  DenseArray actions;
  DenseArray rewards;  // [B, 1]
  DenseArray next_states;
  DenseArray windows;

  [[nodiscard]] std::size_t size() const { return states.rows(); }
};

/// Fixed-capacity FIFO ring of transitions for one task.
///
/// Logical index 0 is the oldest stored record. Records of one episode are
/// added in order, so segments of consecutive steps are contiguous.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim, std::size_t window_width);

  void add(const TransitionRecord& record);

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] std::size_t state_dim() const { return state_dim_; }
  [[nodiscard]] std::size_t action_dim() const { return action_dim_; }
  [[nodiscard]] std::size_t window_width() const { return window_width_; }

  /// n logical indices uniform on [0, size). Throws StateError when empty.
  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, numkit::Rng& rng) const;
  [[nodiscard]] ReplaySample gather(const std::vector<std::size_t>& indices) const;

  /// n logical starts whose next m records belong to one episode at consecutive steps.
  /// Throws StateError if no such start is found.
  [[nodiscard]] std::vector<std::size_t> sample_segment_starts(std::size_t n, std::size_t m, numkit::Rng& rng) const;
  /// Segments with their preceding windows; task_labels filled with `task`.
  [[nodiscard]] models::SegmentBatch gather_segments(const std::vector<std::size_t>& starts, std::size_t m,
                                                     std::size_t task) const;

  [[nodiscard]] std::span<const double> window(std::size_t logical) const;
  [[nodiscard]] std::span<const double> state(std::size_t logical) const;
  [[nodiscard]] std::uint64_t episode(std::size_t logical) const;
  [[nodiscard]] std::size_t step(std::size_t logical) const;
  [[nodiscard]] std::size_t task(std::size_t logical) const;

  void save(numkit::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const numkit::Checkpoint& ckpt, const std::string& prefix);

 private:
  [[nodiscard]] std::size_t physical(std::size_t logical) const;
  [[nodiscard]] bool segment_ok(std::size_t start, std::size_t m) const;

  std::size_t capacity_, state_dim_, action_dim_, window_width_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  DenseArray states_, actions_, rewards_, next_states_, windows_;
  // episode id, step index and task per slot, stored as doubles for checkpointing
  DenseArray meta_;
};

/// Discounted returns R_t = r_t + gamma R_{t+1} over one finished episode.
[[nodiscard]] std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

struct SilSample {
  DenseArray states;
  DenseArray actions;
  DenseArray returns;  // [B, 1]
  DenseArray windows;

  [[nodiscard]] std::size_t size() const { return states.rows(); }
};

/// Ring of (s, a, window, return) filled one finished episode at a time.
class SilBuffer {
 public:
  SilBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim, std::size_t window_width);

  /// Adds every step of a finished episode; returns computed here from `rewards`.
  void add_episode(const std::vector<std::vector<double>>& states, const std::vector<std::vector<double>>& actions,
                   const std::vector<std::vector<double>>& windows, std::span<const double> rewards, double gamma,
                   std::size_t task);

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] SilSample sample(std::size_t n, numkit::Rng& rng) const;
  [[nodiscard]] double stored_return(std::size_t logical) const;

  void save(numkit::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const numkit::Checkpoint& ckpt, const std::string& prefix);

 private:
  [[nodiscard]] std::size_t physical(std::size_t logical) const;

  std::size_t capacity_, state_dim_, action_dim_, window_width_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  DenseArray states_, actions_, returns_, windows_, tasks_;
};

}  // namespace ptl::rl
