#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptl/tabular/mdp.hpp"

namespace ptl::tabular {

/// Exact V^pi from the linear system (I - gamma P_pi) V = r_pi.
[[nodiscard]] std::vector<double> policy_value(const FiniteMdp& mdp, const DetPolicy& pi);

/// max_s |V(s) - (r_pi(s) + gamma (P_pi V)(s))|
[[nodiscard]] double bellman_residual(const FiniteMdp& mdp, const DetPolicy& pi, std::span<const double> values);

struct ValueIterationResult {
  std::vector<double> values;
  DetPolicy greedy;
  std::size_t iterations = 0;
};

/// Optimal values to Bellman residual < tol; greedy policy ties go to the lowest action.
[[nodiscard]] ValueIterationResult value_iteration(const FiniteMdp& mdp, double tol);

/// Iterative evaluation of a fixed policy; independent of the linear solve.
[[nodiscard]] std::vector<double> iterative_policy_value(const FiniteMdp& mdp, const DetPolicy& pi, double tol);

[[nodiscard]] double total_variation(std::span<const double> p, std::span<const double> q);
/// Throws DomainError when q is zero somewhere p is positive.
[[nodiscard]] double kl_divergence(std::span<const double> p, std::span<const double> q);

struct BoundReport {
  double d = 0.0;
  double M = 0.0;
  double bound = 0.0;
  double max_observed_gap = 0.0;
  bool satisfied = true;
};

inline constexpr double kBoundTolerance = 1e-9;

/// Policy-gap bound scalars: M = max_s |V_j|, d = max_s |r_j - r_i| + 2 gamma M TV.
[[nodiscard]] BoundReport theorem1_d(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                                     const DetPolicy& pi_j);

/// Reward r(s,s') shared by both MDPs; M = max_{s,s'} |r(s,s') + gamma V_j(s')|, d = max_s 2 M TV.
/// Throws PreconditionError if rewards depend on the action or differ between the MDPs.
[[nodiscard]] BoundReport prop1_d(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                                  const DetPolicy& pi_j);

/// State-translated variant: gap is max_s |V_i(s) - V_j(G s)| and the TV term
/// compares p_i(.|s) with p_j(G(.)|G s). With G = identity the result is
/// bit-identical to prop1_d. Throws PreconditionError unless
/// r_i(s,s') == r_j(G s, G s') within 1e-9 and both rewards are r(s,s').
[[nodiscard]] BoundReport prop2_verify(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                                       const DetPolicy& pi_j, const StateBijection& g);

struct EquivalentAction {
  std::size_t action = 0;
  double reward_gap = 0.0;
  double tv_gap = 0.0;
};

inline constexpr double kEquivalenceTolerance = 1e-9;

/// Action of mdp_i at s closest to a_j on mdp_j under max(|r gap|, TV gap).
[[nodiscard]] EquivalentAction find_equivalent_action(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, std::size_t s,
                                                      std::size_t a_j);

[[nodiscard]] DetPolicy brute_force_translate_policy(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j,
                                                     const DetPolicy& pi_j);

[[nodiscard]] DetPolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed,
                                      std::uint64_t stream_id);

enum class BoundMode { thm1, prop1, prop2 };

[[nodiscard]] std::string to_string(BoundMode mode);
/// Throws UsageError for anything but thm1/prop1/prop2.
[[nodiscard]] BoundMode bound_mode_from_string(const std::string& name);

/// One verification instance as used by the verify-bounds command.
struct BoundInstance {
  FiniteMdp mdp_i;
  FiniteMdp mdp_j;
  DetPolicy pi_i;
  DetPolicy pi_j;
  StateBijection g = StateBijection::identity(1);
};

/// Deterministic in (seed, sizes, perturbation, mode). pi_j copies pi_i and
/// re-draws each state's action with probability min(perturbation, 1), so a
/// zero perturbation yields identical MDPs and policies. prop2 relabels mdp_j
/// through a random permutation unless identity_bijection is set; with it the
/// instance equals the prop1 instance for the same seed.
[[nodiscard]] BoundInstance make_bound_instance(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                                                double perturbation, BoundMode mode, bool identity_bijection = false);

[[nodiscard]] BoundReport verify_instance(const BoundInstance& instance, BoundMode mode);

}  // namespace ptl::tabular
