#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace ptl::tabular {

/// Finite MDP with dense transition and reward tensors indexed [s][a][s'].
struct FiniteMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.9;
  std::vector<double> rho0;
  std::vector<double> transition;
  std::vector<double> reward;

  FiniteMdp() = default;
  /// Zero rewards, uniform rho0, every action a self-loop.
  FiniteMdp(std::size_t states, std::size_t actions, double gamma);

  [[nodiscard]] std::size_t index(std::size_t s, std::size_t a, std::size_t next) const {
    return (s * n_actions + a) * n_states + next;
  }
  double& p(std::size_t s, std::size_t a, std::size_t next) { return transition[index(s, a, next)]; }
  [[nodiscard]] double p(std::size_t s, std::size_t a, std::size_t next) const { return transition[index(s, a, next)]; }
  double& r(std::size_t s, std::size_t a, std::size_t next) { return reward[index(s, a, next)]; }
  [[nodiscard]] double r(std::size_t s, std::size_t a, std::size_t next) const { return reward[index(s, a, next)]; }

  [[nodiscard]] std::span<const double> next_distribution(std::size_t s, std::size_t a) const;
  /// r(s,a) = sum_s' p(s'|s,a) r(s,a,s').
  [[nodiscard]] double expected_reward(std::size_t s, std::size_t a) const;
  /// True when r[s][a][s'] does not depend on a (exact comparison).
  [[nodiscard]] bool reward_depends_only_on_states() const;

  /// Throws DimensionError / DomainError on malformed tensors or gamma.
  void validate() const;

  friend bool operator==(const FiniteMdp&, const FiniteMdp&) = default;
};

struct DetPolicy {
  std::vector<std::size_t> action_of;

  [[nodiscard]] std::size_t operator()(std::size_t s) const { return action_of.at(s); }
  friend bool operator==(const DetPolicy&, const DetPolicy&) = default;
};

/// Permutation G of state indices with its inverse.
class StateBijection {
 public:
  static StateBijection identity(std::size_t n);
  /// Throws DomainError if `forward` is not a permutation.
  static StateBijection from_forward(std::vector<std::size_t> forward);

  [[nodiscard]] std::size_t operator()(std::size_t s) const { return forward_[s]; }
  [[nodiscard]] std::size_t inverse(std::size_t s) const { return inverse_[s]; }
  [[nodiscard]] std::size_t size() const { return forward_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& forward() const { return forward_; }

 private:
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> inverse_;
};

void validate_policy(const FiniteMdp& mdp, const DetPolicy& pi);

/// mdp with states renamed: result.p(G s, a, G s') = mdp.p(s, a, s'), same for rewards and rho0.
[[nodiscard]] FiniteMdp relabel_states(const FiniteMdp& mdp, const StateBijection& g);

/// mdp with actions renamed: result(s, sigma[a]) = mdp(s, a).
[[nodiscard]] FiniteMdp relabel_actions(const FiniteMdp& mdp, const std::vector<std::size_t>& sigma);

[[nodiscard]] nlohmann::json to_json(const FiniteMdp& mdp);
/// Throws InputError on missing fields, DimensionError/DomainError on invalid tensors.
[[nodiscard]] FiniteMdp mdp_from_json(const nlohmann::json& j);
void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path);
[[nodiscard]] FiniteMdp load_mdp(const std::filesystem::path& path);

enum class RewardForm { state_action_next, state_next };

struct MdpPairOptions {
  RewardForm reward_form = RewardForm::state_action_next;
  double gamma = 0.9;
};

/// Random MDP plus a dynamics-perturbed copy.
///
/// Transition rows are Dirichlet(1,...,1); rewards uniform in [-1, 1]. The
/// second MDP mixes each row as (1-w) p + w q with a fresh Dirichlet row q.
/// Rewards, rho0 and gamma are shared. w = 0 gives bit-identical MDPs.
[[nodiscard]] std::pair<FiniteMdp, FiniteMdp> random_mdp_pair(std::uint64_t seed, std::size_t n_states,
                                                              std::size_t n_actions, double perturbation,
                                                              const MdpPairOptions& options = {});

}  // namespace ptl::tabular
