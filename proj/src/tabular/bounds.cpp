#include "ptl/tabular/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ptl/errors.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::tabular {

namespace {

void require_compatible(const FiniteMdp& a, const FiniteMdp& b) {
  if (a.n_states != b.n_states || a.n_actions != b.n_actions)
    throw DimensionError("MDPs differ in state or action count");
  if (a.gamma != b.gamma) throw DimensionError("MDPs differ in gamma");
}

double max_abs_gap(const std::vector<double>& vi, const std::vector<double>& vj, const StateBijection& g) {
  double gap = 0.0;
  for (std::size_t s = 0; s < vi.size(); ++s) gap = std::max(gap, std::abs(vi[s] - vj[g(s)]));
  return gap;
}

BoundReport finish(double d, double M, double gamma, double gap) {
  BoundReport report;
  report.d = d;
  report.M = M;
  report.bound = d / (1.0 - gamma);
  report.max_observed_gap = gap;
  report.satisfied = gap <= report.bound + kBoundTolerance;
  return report;
}

// Shared by prop1_d and prop2_verify so the identity bijection reproduces
// prop1 bit for bit. M is taken over the j-side values; swapping the roles of
// the two MDPs in the published inequality (G -> G^-1) gives exactly this form.
BoundReport state_reward_bound(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                               const DetPolicy& pi_j, const StateBijection& g) {
  const auto vi = policy_value(mdp_i, pi_i);
  const auto vj = policy_value(mdp_j, pi_j);
  const std::size_t n = mdp_i.n_states;

  double M = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t u_next = 0; u_next < n; ++u_next)
      M = std::max(M, std::abs(mdp_j.r(u, 0, u_next) + mdp_j.gamma * vj[u_next]));

  double d = 0.0;
  std::vector<double> mapped(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto p_i = mdp_i.next_distribution(s, pi_i(s));
    const auto p_j = mdp_j.next_distribution(g(s), pi_j(g(s)));
    for (std::size_t s_next = 0; s_next < n; ++s_next) mapped[s_next] = p_j[g(s_next)];
    d = std::max(d, 2.0 * M * total_variation(p_i, mapped));
  }
  return finish(d, M, mdp_i.gamma, max_abs_gap(vi, vj, g));
}

void require_state_reward(const FiniteMdp& mdp, const char* which) {
  if (!mdp.reward_depends_only_on_states())
    throw PreconditionError(std::string("reward of ") + which + " depends on the action");
}

}  // namespace

std::vector<double> policy_value(const FiniteMdp& mdp, const DetPolicy& pi) {
  validate_policy(mdp, pi);
  const auto n = static_cast<Eigen::Index>(mdp.n_states);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto row = mdp.next_distribution(s, pi(s));
    for (std::size_t next = 0; next < mdp.n_states; ++next)
      system(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next)) -= mdp.gamma * row[next];
    rhs(static_cast<Eigen::Index>(s)) = mdp.expected_reward(s, pi(s));
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd v = lu.solve(rhs);
  // One refinement step keeps the residual well under 1e-10 even for gamma near 1.
  v += lu.solve(rhs - system * v);
  return {v.data(), v.data() + n};
}

double bellman_residual(const FiniteMdp& mdp, const DetPolicy& pi, std::span<const double> values) {
  double worst = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto row = mdp.next_distribution(s, pi(s));
    double backup = mdp.expected_reward(s, pi(s));
    for (std::size_t next = 0; next < mdp.n_states; ++next) backup += mdp.gamma * row[next] * values[next];
    worst = std::max(worst, std::abs(values[s] - backup));
  }
  return worst;
}

ValueIterationResult value_iteration(const FiniteMdp& mdp, double tol) {
  if (!(tol > 0.0)) throw DomainError("value_iteration tolerance must be positive");
  mdp.validate();
  ValueIterationResult result;
  result.values.assign(mdp.n_states, 0.0);
  result.greedy.action_of.assign(mdp.n_states, 0);
  std::vector<double> next_values(mdp.n_states);
  auto q = [&](const std::vector<double>& v, std::size_t s, std::size_t a) {
    double total = mdp.expected_reward(s, a);
    const auto row = mdp.next_distribution(s, a);
    for (std::size_t n = 0; n < mdp.n_states; ++n) total += mdp.gamma * row[n] * v[n];
    return total;
  };
  while (true) {
    double residual = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      double best = q(result.values, s, 0);
      for (std::size_t a = 1; a < mdp.n_actions; ++a) best = std::max(best, q(result.values, s, a));
      next_values[s] = best;
      residual = std::max(residual, std::abs(best - result.values[s]));
    }
    ++result.iterations;
    result.values.swap(next_values);
    if (residual < tol) break;
  }
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double best = q(result.values, s, 0);
    for (std::size_t a = 1; a < mdp.n_actions; ++a) {
      const double value = q(result.values, s, a);
      if (value > best) {
        best = value;
        result.greedy.action_of[s] = a;
      }
    }
  }
  return result;
}

std::vector<double> iterative_policy_value(const FiniteMdp& mdp, const DetPolicy& pi, double tol) {
  validate_policy(mdp, pi);
  std::vector<double> v(mdp.n_states, 0.0), next(mdp.n_states);
  while (true) {
    double change = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const auto row = mdp.next_distribution(s, pi(s));
      double backup = mdp.expected_reward(s, pi(s));
      for (std::size_t n = 0; n < mdp.n_states; ++n) backup += mdp.gamma * row[n] * v[n];
      next[s] = backup;
      change = std::max(change, std::abs(backup - v[s]));
    }
    v.swap(next);
    if (change < tol) return v;
  }
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("total_variation: length mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += std::abs(p[k] - q[k]);
  return 0.5 * total;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: length mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (q[k] <= 0.0) throw DomainError("kl_divergence: q vanishes where p is positive");
    total += p[k] * std::log(p[k] / q[k]);
  }
  return std::max(total, 0.0);
}

BoundReport theorem1_d(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                       const DetPolicy& pi_j) {
  require_compatible(mdp_i, mdp_j);
  const auto vi = policy_value(mdp_i, pi_i);
  const auto vj = policy_value(mdp_j, pi_j);
  double M = 0.0;
  for (double v : vj) M = std::max(M, std::abs(v));
  double d = 0.0;
  for (std::size_t s = 0; s < mdp_i.n_states; ++s) {
    const double reward_gap = std::abs(mdp_j.expected_reward(s, pi_j(s)) - mdp_i.expected_reward(s, pi_i(s)));
    const double tv = total_variation(mdp_i.next_distribution(s, pi_i(s)), mdp_j.next_distribution(s, pi_j(s)));
    d = std::max(d, reward_gap + 2.0 * mdp_i.gamma * M * tv);
  }
  return finish(d, M, mdp_i.gamma, max_abs_gap(vi, vj, StateBijection::identity(mdp_i.n_states)));
}

BoundReport prop1_d(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i, const DetPolicy& pi_j) {
  require_compatible(mdp_i, mdp_j);
  require_state_reward(mdp_i, "mdp_i");
  require_state_reward(mdp_j, "mdp_j");
  if (mdp_i.reward != mdp_j.reward) throw PreconditionError("prop1 requires both MDPs to share r(s,s')");
  return state_reward_bound(mdp_i, mdp_j, pi_i, pi_j, StateBijection::identity(mdp_i.n_states));
}

BoundReport prop2_verify(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_i,
                         const DetPolicy& pi_j, const StateBijection& g) {
  require_compatible(mdp_i, mdp_j);
  if (g.size() != mdp_i.n_states) throw DimensionError("bijection size differs from n_states");
  require_state_reward(mdp_i, "mdp_i");
  require_state_reward(mdp_j, "mdp_j");
  for (std::size_t s = 0; s < mdp_i.n_states; ++s)
    for (std::size_t n = 0; n < mdp_i.n_states; ++n)
      if (std::abs(mdp_i.r(s, 0, n) - mdp_j.r(g(s), 0, g(n))) > 1e-9)
        throw PreconditionError("rewards are not consistent under the state bijection");
  return state_reward_bound(mdp_i, mdp_j, pi_i, pi_j, g);
}

EquivalentAction find_equivalent_action(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, std::size_t s,
                                        std::size_t a_j) {
  require_compatible(mdp_i, mdp_j);
  if (s >= mdp_i.n_states || a_j >= mdp_j.n_actions) throw DimensionError("state or action index out of range");
  const double target_reward = mdp_j.expected_reward(s, a_j);
  const auto target_next = mdp_j.next_distribution(s, a_j);
  EquivalentAction best;
  double best_score = INFINITY;
  for (std::size_t a = 0; a < mdp_i.n_actions; ++a) {
    const double reward_gap = std::abs(mdp_i.expected_reward(s, a) - target_reward);
    const double tv_gap = total_variation(mdp_i.next_distribution(s, a), target_next);
    const double score = std::max(reward_gap, tv_gap);
    if (score < best_score) {
      best_score = score;
      best = {a, reward_gap, tv_gap};
    }
  }
  return best;
}

DetPolicy brute_force_translate_policy(const FiniteMdp& mdp_i, const FiniteMdp& mdp_j, const DetPolicy& pi_j) {
  validate_policy(mdp_j, pi_j);
  DetPolicy pi_i;
  pi_i.action_of.resize(mdp_i.n_states);
  for (std::size_t s = 0; s < mdp_i.n_states; ++s)
    pi_i.action_of[s] = find_equivalent_action(mdp_i, mdp_j, s, pi_j(s)).action;
  return pi_i;
}

DetPolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed, std::uint64_t stream_id) {
  numkit::Rng rng(seed, stream_id);
  DetPolicy pi;
  pi.action_of.resize(n_states);
  for (auto& a : pi.action_of) a = rng.index(n_actions);
  return pi;
}

std::string to_string(BoundMode mode) {
  switch (mode) {
    case BoundMode::thm1: return "thm1";
    case BoundMode::prop1: return "prop1";
    case BoundMode::prop2: return "prop2";
  }
  return "?";
}

BoundMode bound_mode_from_string(const std::string& name) {
  if (name == "thm1") return BoundMode::thm1;
  if (name == "prop1") return BoundMode::prop1;
  if (name == "prop2") return BoundMode::prop2;
  throw UsageError("unknown bound mode '" + name + "' (expected thm1, prop1 or prop2)");
}

BoundInstance make_bound_instance(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                                  double perturbation, BoundMode mode, bool identity_bijection) {
  MdpPairOptions options;
  options.reward_form = mode == BoundMode::thm1 ? RewardForm::state_action_next : RewardForm::state_next;
  auto [mdp_i, perturbed] = random_mdp_pair(seed, n_states, n_actions, perturbation, options);
  BoundInstance inst;
  inst.pi_i = random_policy(n_states, n_actions, seed, 2);
  // pi_j re-draws each state's action with probability min(perturbation, 1)
  DetPolicy pi_perturbed = inst.pi_i;
  {
    numkit::Rng policy_rng(seed, 3);
    const double p_redraw = std::min(perturbation, 1.0);
    for (auto& a : pi_perturbed.action_of) {
      const double u = policy_rng.uniform();
      const std::size_t redraw = policy_rng.index(n_actions);
      if (u < p_redraw) a = redraw;
    }
  }
  inst.g = StateBijection::identity(n_states);
  if (mode == BoundMode::prop2 && !identity_bijection) {
    numkit::Rng perm_rng(seed, 4);
    inst.g = StateBijection::from_forward(perm_rng.permutation(n_states));
  }
  inst.mdp_j = relabel_states(perturbed, inst.g);
  inst.pi_j.action_of.resize(n_states);
  for (std::size_t u = 0; u < n_states; ++u) inst.pi_j.action_of[u] = pi_perturbed(inst.g.inverse(u));
  inst.mdp_i = std::move(mdp_i);
  return inst;
}

BoundReport verify_instance(const BoundInstance& instance, BoundMode mode) {
  switch (mode) {
    case BoundMode::thm1: return theorem1_d(instance.mdp_i, instance.mdp_j, instance.pi_i, instance.pi_j);
    case BoundMode::prop1: return prop1_d(instance.mdp_i, instance.mdp_j, instance.pi_i, instance.pi_j);
    case BoundMode::prop2:
      return prop2_verify(instance.mdp_i, instance.mdp_j, instance.pi_i, instance.pi_j, instance.g);
  }
  throw UsageError("unknown bound mode");
}

}  // namespace ptl::tabular
