#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace ptl::models {

/// Rolling window of the last K (state delta, action) pairs.
///
/// flat() is oldest first and zero-padded at the front when fewer than K
/// transitions have been pushed.
class HistoryWindow {
 public:
  HistoryWindow(std::size_t k, std::size_t state_dim, std::size_t action_dim);

  void clear() { entries_.clear(); }
  /// Records the transition state -> next_state under action.
  void push(std::span<const double> state, std::span<const double> action, std::span<const double> next_state);

  [[nodiscard]] std::vector<double> flat() const;
  [[nodiscard]] std::size_t width() const { return k_ * (state_dim_ + action_dim_); }
  [[nodiscard]] std::size_t filled() const { return entries_.size(); }
  [[nodiscard]] std::size_t k() const { return k_; }

 private:
  std::size_t k_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::deque<std::vector<double>> entries_;
};

[[nodiscard]] inline std::size_t history_width(std::size_t k, std::size_t state_dim, std::size_t action_dim) {
  return k * (state_dim + action_dim);
}

}  // namespace ptl::models
