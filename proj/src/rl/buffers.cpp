#include "ptl/rl/buffers.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"

namespace ptl::rl {

namespace {

void copy_row(DenseArray& dst, std::size_t row, std::span<const double> src, const char* what) {
  if (src.size() != dst.cols()) throw DimensionError(std::string("replay record field '") + what + "' has wrong width");
  std::copy(src.begin(), src.end(), dst.row(row).begin());
}

DenseArray gather_rows(const DenseArray& src, const std::vector<std::size_t>& rows) {
  DenseArray out = DenseArray::matrix(rows.size(), src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto r = src.row(rows[k]);
    std::copy(r.begin(), r.end(), out.row(k).begin());
  }
  return out;
}

constexpr std::size_t kMetaEpisode = 0, kMetaStep = 1, kMetaTask = 2;

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim,
                           std::size_t window_width)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim), window_width_(window_width) {
  if (capacity == 0) throw DimensionError("replay capacity must be positive");
  states_ = DenseArray::matrix(capacity, state_dim);
  actions_ = DenseArray::matrix(capacity, action_dim);
  rewards_ = DenseArray::matrix(capacity, 1);
  next_states_ = DenseArray::matrix(capacity, state_dim);
  windows_ = DenseArray::matrix(capacity, window_width);
  meta_ = DenseArray::matrix(capacity, 3);
}

void ReplayBuffer::add(const TransitionRecord& record) {
  if (!std::isfinite(record.reward)) throw NumericError("replay record has a non-finite reward");
  copy_row(states_, next_, record.state, "state");
  copy_row(actions_, next_, record.action, "action");
  copy_row(next_states_, next_, record.next_state, "next_state");
  copy_row(windows_, next_, record.window, "window");
  rewards_(next_, 0) = record.reward;
  meta_(next_, kMetaEpisode) = static_cast<double>(record.episode);
  meta_(next_, kMetaStep) = static_cast<double>(record.step);
  meta_(next_, kMetaTask) = static_cast<double>(record.task);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::physical(std::size_t logical) const {
  if (logical >= size_) throw DimensionError("replay index out of range");
  return (next_ + capacity_ - size_ + logical) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, numkit::Rng& rng) const {
  if (size_ == 0) throw StateError("cannot sample an empty replay buffer");
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = rng.index(size_);
  return out;
}

ReplaySample ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  std::vector<std::size_t> rows;
  rows.reserve(indices.size());
  for (std::size_t i : indices) rows.push_back(physical(i));
  return {gather_rows(states_, rows), gather_rows(actions_, rows), gather_rows(rewards_, rows),
          gather_rows(next_states_, rows), gather_rows(windows_, rows)};
}

bool ReplayBuffer::segment_ok(std::size_t start, std::size_t m) const {
  if (start + m > size_) return false;
  const std::size_t a = physical(start), b = physical(start + m - 1);
  return meta_(a, kMetaEpisode) == meta_(b, kMetaEpisode) &&
         meta_(b, kMetaStep) == meta_(a, kMetaStep) + static_cast<double>(m - 1);
}

std::vector<std::size_t> ReplayBuffer::sample_segment_starts(std::size_t n, std::size_t m, numkit::Rng& rng) const {
  if (size_ < m) throw StateError("replay buffer holds fewer records than one segment");
  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t attempts = 0;
  while (out.size() < n) {
    const std::size_t start = rng.index(size_ - m + 1);
    if (segment_ok(start, m)) {
      out.push_back(start);
    } else if (++attempts > 1000 * (n + 1)) {
      throw StateError("no complete segment of length " + std::to_string(m) + " in replay buffer");
    }
  }
  return out;
}

models::SegmentBatch ReplayBuffer::gather_segments(const std::vector<std::size_t>& starts, std::size_t m,
                                                   std::size_t task) const {
  std::vector<std::size_t> first, all;
  for (std::size_t s : starts) {
    first.push_back(physical(s));
    for (std::size_t k = 0; k < m; ++k) all.push_back(physical(s + k));
  }
  models::SegmentBatch batch;
  batch.m = m;
  batch.windows = gather_rows(windows_, first);
  batch.states = gather_rows(states_, all);
  batch.actions = gather_rows(actions_, all);
  batch.next_states = gather_rows(next_states_, all);
  batch.task_labels.assign(starts.size(), task);
  return batch;
}

std::span<const double> ReplayBuffer::window(std::size_t logical) const { return windows_.row(physical(logical)); }
std::span<const double> ReplayBuffer::state(std::size_t logical) const { return states_.row(physical(logical)); }
std::uint64_t ReplayBuffer::episode(std::size_t logical) const {
  return static_cast<std::uint64_t>(meta_(physical(logical), kMetaEpisode));
}
std::size_t ReplayBuffer::step(std::size_t logical) const {
  return static_cast<std::size_t>(meta_(physical(logical), kMetaStep));
}
std::size_t ReplayBuffer::task(std::size_t logical) const {
  return static_cast<std::size_t>(meta_(physical(logical), kMetaTask));
}

void ReplayBuffer::save(numkit::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put(prefix + "/states", states_);
  ckpt.put(prefix + "/actions", actions_);
  ckpt.put(prefix + "/rewards", rewards_);
  ckpt.put(prefix + "/next_states", next_states_);
  ckpt.put(prefix + "/windows", windows_);
  ckpt.put(prefix + "/meta", meta_);
  ckpt.put(prefix + "/cursor", DenseArray::vector({static_cast<double>(next_), static_cast<double>(size_)}));
}

void ReplayBuffer::load(const numkit::Checkpoint& ckpt, const std::string& prefix) {
  auto take = [&](const char* name, DenseArray& dst) {
    const auto& src = ckpt.get(prefix + "/" + name);
    require_same_shape(src, dst, "checkpoint replay buffer");
    dst = src;
  };
  take("states", states_);
  take("actions", actions_);
  take("rewards", rewards_);
  take("next_states", next_states_);
  take("windows", windows_);
  take("meta", meta_);
  const auto& cursor = ckpt.get(prefix + "/cursor");
  next_ = static_cast<std::size_t>(cursor[0]);
  size_ = static_cast<std::size_t>(cursor[1]);
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

SilBuffer::SilBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim, std::size_t window_width)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim), window_width_(window_width) {
  if (capacity == 0) throw DimensionError("SIL capacity must be positive");
  states_ = DenseArray::matrix(capacity, state_dim);
  actions_ = DenseArray::matrix(capacity, action_dim);
  returns_ = DenseArray::matrix(capacity, 1);
  windows_ = DenseArray::matrix(capacity, window_width);
  tasks_ = DenseArray::matrix(capacity, 1);
}

void SilBuffer::add_episode(const std::vector<std::vector<double>>& states,
                            const std::vector<std::vector<double>>& actions,
                            const std::vector<std::vector<double>>& windows, std::span<const double> rewards,
                            double gamma, std::size_t task) {
  const std::size_t n = rewards.size();
  if (states.size() != n || actions.size() != n || windows.size() != n)
    throw DimensionError("SIL episode fields have different lengths");
  const auto returns = compute_returns(rewards, gamma);
  for (std::size_t t = 0; t < n; ++t) {
    if (!std::isfinite(returns[t])) throw NumericError("non-finite SIL return");
    copy_row(states_, next_, states[t], "state");
    copy_row(actions_, next_, actions[t], "action");
    copy_row(windows_, next_, windows[t], "window");
    returns_(next_, 0) = returns[t];
    tasks_(next_, 0) = static_cast<double>(task);
    next_ = (next_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }
}

std::size_t SilBuffer::physical(std::size_t logical) const {
  if (logical >= size_) throw DimensionError("SIL index out of range");
  return (next_ + capacity_ - size_ + logical) % capacity_;
}

double SilBuffer::stored_return(std::size_t logical) const { return returns_(physical(logical), 0); }

SilSample SilBuffer::sample(std::size_t n, numkit::Rng& rng) const {
  if (size_ == 0) throw StateError("cannot sample an empty SIL buffer");
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = physical(rng.index(size_));
  return {gather_rows(states_, rows), gather_rows(actions_, rows), gather_rows(returns_, rows),
          gather_rows(windows_, rows)};
}

void SilBuffer::save(numkit::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put(prefix + "/states", states_);
  ckpt.put(prefix + "/actions", actions_);
  ckpt.put(prefix + "/returns", returns_);
  ckpt.put(prefix + "/windows", windows_);
  ckpt.put(prefix + "/tasks", tasks_);
  ckpt.put(prefix + "/cursor", DenseArray::vector({static_cast<double>(next_), static_cast<double>(size_)}));
}

void SilBuffer::load(const numkit::Checkpoint& ckpt, const std::string& prefix) {
  auto take = [&](const char* name, DenseArray& dst) {
    const auto& src = ckpt.get(prefix + "/" + name);
    require_same_shape(src, dst, "checkpoint SIL buffer");
    dst = src;
  };
  take("states", states_);
  take("actions", actions_);
  take("returns", returns_);
  take("windows", windows_);
  take("tasks", tasks_);
  const auto& cursor = ckpt.get(prefix + "/cursor");
  next_ = static_cast<std::size_t>(cursor[0]);
  size_ = static_cast<std::size_t>(cursor[1]);
}

}  // namespace ptl::rl
