#include "ptl/mcat/selection.hpp"

#include <algorithm>
#include <numeric>

#include "ptl/errors.hpp"

namespace ptl::mcat {

namespace {

std::optional<double> mean_of(const std::vector<RewardEntry>& w) {
  if (w.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& e : w) s += e.reward;
  return s / static_cast<double>(w.size());
}

}  // namespace

RewardWindows::RewardWindows(std::size_t n_tasks, std::uint64_t window_steps)
    : n_(n_tasks), window_(window_steps), shared_(n_tasks), transferred_(n_tasks * n_tasks) {
  if (n_tasks == 0) throw DomainError("reward windows need at least one task");
  if (window_steps == 0) throw DomainError("reward window length must be positive");
}

void RewardWindows::check(std::size_t task) const {
  if (task >= n_) throw DimensionError("task " + std::to_string(task) + " out of range for " + std::to_string(n_));
}

const std::vector<RewardEntry>& RewardWindows::shared(std::size_t task) const {
  check(task);
  return shared_[task];
}

const std::vector<RewardEntry>& RewardWindows::transferred(std::size_t source, std::size_t target) const {
  check(source);
  check(target);
  return transferred_[source * n_ + target];
}

void RewardWindows::add_shared(std::size_t task, RewardEntry entry) {
  check(task);
  shared_[task].push_back(entry);
}

void RewardWindows::add_transferred(std::size_t source, std::size_t target, RewardEntry entry) {
  check(source);
  check(target);
  if (source == target) throw DomainError("transferred window needs source != target");
  transferred_[source * n_ + target].push_back(entry);
}

std::optional<double> RewardWindows::shared_mean(std::size_t task) const { return mean_of(shared(task)); }
std::optional<double> RewardWindows::transferred_mean(std::size_t source, std::size_t target) const {
  return mean_of(transferred(source, target));
}

void RewardWindows::evict(std::uint64_t now) {
  auto stale = [&](const RewardEntry& e) { return e.timestep + window_ < now; };
  for (auto& w : shared_) std::erase_if(w, stale);
  for (auto& w : transferred_) std::erase_if(w, stale);
}

nlohmann::json RewardWindows::to_json() const {
  auto dump = [](const std::vector<std::vector<RewardEntry>>& lists) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : lists) {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& e : l) entries.push_back({e.reward, e.timestep});
      out.push_back(entries);
    }
    return out;
  };
  return {{"n_tasks", n_}, {"window_steps", window_}, {"shared", dump(shared_)}, {"transferred", dump(transferred_)}};
}

RewardWindows RewardWindows::from_json(const nlohmann::json& j) {
  RewardWindows w(j.at("n_tasks").get<std::size_t>(), j.at("window_steps").get<std::uint64_t>());
  auto read = [](const nlohmann::json& src, std::vector<std::vector<RewardEntry>>& lists) {
    if (src.size() != lists.size()) throw InputError("reward window list count mismatch");
    for (std::size_t k = 0; k < lists.size(); ++k)
      for (const auto& e : src[k]) lists[k].push_back({e.at(0).get<double>(), e.at(1).get<std::uint64_t>()});
  };
  read(j.at("shared"), w.shared_);
  read(j.at("transferred"), w.transferred_);
  return w;
}

BehaviorChoice select_behavior(const RewardWindows& windows, std::size_t target) {
  const auto own = windows.shared_mean(target);
  if (!own) return BehaviorChoice::shared();
  const std::size_t n = windows.n_tasks();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == target || !windows.transferred(j, target).empty()) continue;
    const auto other = windows.shared_mean(j);
    if (other && *other > *own) return BehaviorChoice::transferred_from(j);
  }
  std::optional<std::size_t> best;
  double best_mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == target) continue;
    const auto m = windows.transferred_mean(j, target);
    if (m && (!best || *m > best_mean)) {
      best = j;
      best_mean = *m;
    }
  }
  if (best && best_mean > *own) return BehaviorChoice::transferred_from(*best);
  return BehaviorChoice::shared();
}

void record_episode(RewardWindows& windows, std::size_t target, const BehaviorChoice& choice, double episode_reward,
                    std::uint64_t timestep) {
  if (choice.is_shared()) {
    windows.add_shared(target, {episode_reward, timestep});
  } else {
    if (!choice.source_task) throw PreconditionError("transferred choice without a source task");
    windows.add_transferred(*choice.source_task, target, {episode_reward, timestep});
  }
  windows.evict(timestep);
}

}  // namespace ptl::mcat
