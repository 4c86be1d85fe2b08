#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

namespace ptl::mcat {

struct RewardEntry {
  double reward = 0.0;
  std::uint64_t timestep = 0;
  friend bool operator==(const RewardEntry&, const RewardEntry&) = default;
};

/// Recent episode rewards of the shared policy per task and of the transferred
/// policy per ordered (source, target) pair.
class RewardWindows {
 public:
  RewardWindows() = default;
  RewardWindows(std::size_t n_tasks, std::uint64_t window_steps);

  [[nodiscard]] std::size_t n_tasks() const { return n_; }
  [[nodiscard]] std::uint64_t window_steps() const { return window_; }

  [[nodiscard]] const std::vector<RewardEntry>& shared(std::size_t task) const;
  [[nodiscard]] const std::vector<RewardEntry>& transferred(std::size_t source, std::size_t target) const;
  void add_shared(std::size_t task, RewardEntry entry);
  void add_transferred(std::size_t source, std::size_t target, RewardEntry entry);

  /// Mean of a window; nullopt when empty.
  [[nodiscard]] std::optional<double> shared_mean(std::size_t task) const;
  [[nodiscard]] std::optional<double> transferred_mean(std::size_t source, std::size_t target) const;

  /// Drops entries recorded more than G steps before `now`.
  void evict(std::uint64_t now);

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] static RewardWindows from_json(const nlohmann::json& j);

  friend bool operator==(const RewardWindows&, const RewardWindows&) = default;

 private:
  void check(std::size_t task) const;

  std::size_t n_ = 0;
  std::uint64_t window_ = 0;
  std::vector<std::vector<RewardEntry>> shared_;
  std::vector<std::vector<RewardEntry>> transferred_;  // index source * n + target
};

struct BehaviorChoice {
  enum class Kind { shared, transferred };
  Kind kind = Kind::shared;
  std::optional<std::size_t> source_task;

  static BehaviorChoice shared() { return {}; }
  static BehaviorChoice transferred_from(std::size_t source) { return {Kind::transferred, source}; }
  [[nodiscard]] bool is_shared() const { return kind == Kind::shared; }
  friend bool operator==(const BehaviorChoice&, const BehaviorChoice&) = default;
};

/// Episode-level choice for target task i:
///  1. no shared rewards on i -> shared
///  2. smallest j != i with an empty j->i window and mean R(j) > mean R(i) -> transferred from j
///  3. j = argmax mean R(j->i) over non-empty windows (ties to smallest j); if it beats mean R(i) -> transferred
///  4. otherwise shared
[[nodiscard]] BehaviorChoice select_behavior(const RewardWindows& windows, std::size_t target);

/// Appends the episode reward to the window the choice names, then evicts at `timestep`.
void record_episode(RewardWindows& windows, std::size_t target, const BehaviorChoice& choice, double episode_reward,
                    std::uint64_t timestep);

}  // namespace ptl::mcat
