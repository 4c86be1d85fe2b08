#include "ptl/models/history.hpp"

#include <algorithm>

#include "ptl/errors.hpp"

namespace ptl::models {

HistoryWindow::HistoryWindow(std::size_t k, std::size_t state_dim, std::size_t action_dim)
    : k_(k), state_dim_(state_dim), action_dim_(action_dim) {
  if (k == 0) throw DimensionError("history length K must be positive");
}

void HistoryWindow::push(std::span<const double> state, std::span<const double> action,
                         std::span<const double> next_state) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ || action.size() != action_dim_)
    throw DimensionError("history transition has the wrong width");
  std::vector<double> entry(state_dim_ + action_dim_);
  for (std::size_t d = 0; d < state_dim_; ++d) entry[d] = next_state[d] - state[d];
  std::copy(action.begin(), action.end(), entry.begin() + static_cast<std::ptrdiff_t>(state_dim_));
  entries_.push_back(std::move(entry));
  if (entries_.size() > k_) entries_.pop_front();
}

std::vector<double> HistoryWindow::flat() const {
  std::vector<double> out(width(), 0.0);
  const std::size_t per = state_dim_ + action_dim_;
  std::size_t offset = (k_ - entries_.size()) * per;
  for (const auto& e : entries_) {
    std::copy(e.begin(), e.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += per;
  }
  return out;
}

}  // namespace ptl::models
