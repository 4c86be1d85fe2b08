#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "ptl/errors.hpp"
#include "ptl/numkit/rng.hpp"
#include "ptl/tabular/bounds.hpp"
#include "ptl/tabular/mdp.hpp"

using namespace ptl::tabular;

namespace {

// Every deterministic policy of a small MDP, in lexicographic order.
std::vector<DetPolicy> all_policies(std::size_t states, std::size_t actions) {
  std::vector<DetPolicy> out;
  std::vector<std::size_t> cur(states, 0);
  while (true) {
    out.push_back({cur});
    std::size_t k = 0;
    while (k < states && ++cur[k] == actions) cur[k++] = 0;
    if (k == states) return out;
  }
}

FiniteMdp two_state_chain() {
  // action 0 stays, action 1 switches; reward 1 for landing in state 1.
  FiniteMdp m(2, 2, 0.5);
  for (std::size_t s = 0; s < 2; ++s) {
    m.p(s, 0, s) = 1.0;
    m.p(s, 1, s) = 0.0;
    m.p(s, 1, 1 - s) = 1.0;
    for (std::size_t a = 0; a < 2; ++a) m.r(s, a, 1) = 1.0;
  }
  return m;
}

}  // namespace

TEST(FiniteMdp, ValidateRejectsBadRows) {
  FiniteMdp m(2, 1, 0.9);
  m.p(0, 0, 0) = 0.7;
  EXPECT_THROW(m.validate(), ptl::DomainError);
  FiniteMdp g(1, 1, 1.0);
  EXPECT_THROW(g.validate(), ptl::DomainError);
}

TEST(FiniteMdp, JsonRoundTrip) {
  auto [a, b] = random_mdp_pair(3, 4, 3, 0.5);
  const auto path = std::filesystem::temp_directory_path() / "ptl_mdp_roundtrip.json";
  save_mdp(b, path);
  EXPECT_EQ(load_mdp(path), b);
  std::filesystem::remove(path);
  auto j = to_json(a);
  j.erase("reward");
  EXPECT_THROW(mdp_from_json(j), ptl::InputError);
}

TEST(PolicyValue, SingleStateGeometricSeries) {
  FiniteMdp m(1, 1, 0.99);
  m.r(0, 0, 0) = 1.0;
  auto v = policy_value(m, {{0}});
  EXPECT_NEAR(v[0], 100.0, 1e-9);
}

TEST(PolicyValue, ZeroRewardsGiveZeroValues) {
  auto [m, unused] = random_mdp_pair(1, 5, 2, 0.0);
  std::fill(m.reward.begin(), m.reward.end(), 0.0);
  for (double v : policy_value(m, random_policy(5, 2, 1, 0))) EXPECT_EQ(v, 0.0);
}

TEST(PolicyValue, MatchesIterativeEvaluation) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto [m, unused] = random_mdp_pair(seed, 5, 3, 0.0);
    const auto pi = random_policy(5, 3, seed, 9);
    const auto exact = policy_value(m, pi);
    const auto iterated = iterative_policy_value(m, pi, 1e-13);
    EXPECT_LT(bellman_residual(m, pi, exact), 1e-10);
    for (std::size_t s = 0; s < 5; ++s) EXPECT_NEAR(exact[s], iterated[s], 1e-9);
  }
}

TEST(ValueIteration, SingleState) {
  FiniteMdp m(1, 2, 0.8);
  m.r(0, 0, 0) = 0.5;
  m.r(0, 1, 0) = 2.0;
  auto result = value_iteration(m, 1e-12);
  EXPECT_NEAR(result.values[0], 2.0 / 0.2, 1e-10);
  EXPECT_EQ(result.greedy(0), 1u);
}

TEST(ValueIteration, HandSolvedChain) {
  // Hand enumeration of the four policies with gamma = 0.5:
  // (stay,stay): V = (0, 2); (switch,stay): V = (2, 2);
  // (stay,switch): V = (0, 0); (switch,switch): V = (4/3, 2/3).
  const auto m = two_state_chain();
  auto result = value_iteration(m, 1e-13);
  EXPECT_NEAR(result.values[0], 2.0, 1e-12);
  EXPECT_NEAR(result.values[1], 2.0, 1e-12);
  EXPECT_EQ(result.greedy.action_of, (std::vector<std::size_t>{1, 0}));
  auto v = policy_value(m, {{1, 1}});
  EXPECT_NEAR(v[0], 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(v[1], 2.0 / 3.0, 1e-12);
}

TEST(ValueIteration, GreedyPolicyDominatesEveryPolicy) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto [m, unused] = random_mdp_pair(seed, 3, 2, 0.0);
    const auto greedy_values = policy_value(m, value_iteration(m, 1e-12).greedy);
    for (const auto& pi : all_policies(3, 2)) {
      const auto v = policy_value(m, pi);
      for (std::size_t s = 0; s < 3; ++s) EXPECT_GE(greedy_values[s], v[s] - 1e-9);
    }
  }
}

TEST(TotalVariation, Examples) {
  std::vector<double> p{0.5, 0.5}, q{1.0, 0.0}, r{0.0, 1.0};
  EXPECT_EQ(total_variation(p, p), 0.0);
  EXPECT_EQ(total_variation(q, r), 1.0);
  EXPECT_EQ(total_variation(p, q), 0.5);
  EXPECT_THROW((void)total_variation(p, std::vector<double>{1.0}), ptl::DimensionError);
}

TEST(TotalVariation, MetricPropertiesOnRandomTriples) {
  ptl::numkit::Rng rng(4);
  auto draw = [&] {
    std::vector<double> d(6);
    double sum = 0;
    for (double& v : d) sum += (v = rng.uniform());
    for (double& v : d) v /= sum;
    return d;
  };
  for (int k = 0; k < 1000; ++k) {
    auto p = draw(), q = draw(), r = draw();
    const double pq = total_variation(p, q);
    EXPECT_EQ(pq, total_variation(q, p));
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0);
    EXPECT_LE(total_variation(p, r), pq + total_variation(q, r) + 1e-15);
  }
}

TEST(KlDivergence, Examples) {
  std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(p, q), 0.5 * std::log(5.0 / 9.0) + 0.5 * std::log(5.0), 1e-15);
  EXPECT_THROW((void)kl_divergence(p, std::vector<double>{1.0, 0.0}), ptl::DomainError);
}

TEST(KlDivergence, PinskerDirectionOnRandomPairs) {
  ptl::numkit::Rng rng(8);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> p(5), q(5);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      sp += (p[i] = rng.uniform() + 1e-3);
      sq += (q[i] = rng.uniform() + 1e-3);
    }
    for (std::size_t i = 0; i < 5; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double tv = total_variation(p, q);
    EXPECT_LE(tv * tv, kl_divergence(p, q));
  }
}

TEST(PolicyGapBound, IdenticalInputsGiveZero) {
  auto [m, unused] = random_mdp_pair(5, 6, 3, 0.0);
  const auto pi = random_policy(6, 3, 5, 1);
  auto report = theorem1_d(m, m, pi, pi);
  EXPECT_EQ(report.d, 0.0);
  EXPECT_EQ(report.max_observed_gap, 0.0);
  EXPECT_TRUE(report.satisfied);
}

TEST(PolicyGapBound, RewardShiftMeetsBoundWithEquality) {
  auto [mi, unused] = random_mdp_pair(6, 5, 2, 0.0);
  FiniteMdp mj = mi;
  const double c = 0.3;
  for (double& r : mj.reward) r += c;
  const auto pi = random_policy(5, 2, 6, 1);
  auto report = theorem1_d(mi, mj, pi, pi);
  EXPECT_NEAR(report.d, c, 1e-12);
  EXPECT_NEAR(report.max_observed_gap, c / (1.0 - mi.gamma), 1e-9);
  EXPECT_NEAR(report.bound, report.max_observed_gap, 1e-9);
  EXPECT_TRUE(report.satisfied);
}

TEST(PolicyGapBound, RandomPairsSatisfied) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto inst = make_bound_instance(seed, 2 + seed % 9, 1 + seed % 5, 0.1 * static_cast<double>(seed % 11),
                                    BoundMode::thm1);
    EXPECT_TRUE(verify_instance(inst, BoundMode::thm1).satisfied) << seed;
  }
}

TEST(Prop1, RejectsActionDependentReward) {
  auto [mi, mj] = random_mdp_pair(1, 3, 2, 0.1);
  EXPECT_THROW((void)prop1_d(mi, mj, {{0, 0, 0}}, {{0, 0, 0}}), ptl::PreconditionError);
}

TEST(Prop1, IdenticalDynamicsGiveZero) {
  auto [mi, mj] = random_mdp_pair(2, 4, 3, 0.0, {RewardForm::state_next});
  const auto pi = random_policy(4, 3, 2, 1);
  auto report = prop1_d(mi, mj, pi, pi);
  EXPECT_EQ(report.d, 0.0);
  EXPECT_EQ(report.max_observed_gap, 0.0);
}

TEST(Prop1, SingleDifferingStateGivesItsTvTerm) {
  auto [mi, other] = random_mdp_pair(3, 5, 2, 0.7, {RewardForm::state_next});
  FiniteMdp mj = mi;
  const std::size_t changed = 2;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t n = 0; n < 5; ++n) mj.p(changed, a, n) = other.p(changed, a, n);
  const DetPolicy pi{{0, 1, 1, 0, 1}};
  auto report = prop1_d(mi, mj, pi, pi);
  // Oracle: M straight from the definition, TV from the differing rows only.
  const auto vj = iterative_policy_value(mj, pi, 1e-14);
  double M = 0;
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t n = 0; n < 5; ++n) M = std::max(M, std::abs(mi.r(s, 0, n) + mi.gamma * vj[n]));
  double tv = 0;
  for (std::size_t n = 0; n < 5; ++n) tv += 0.5 * std::abs(mi.p(changed, 1, n) - mj.p(changed, 1, n));
  EXPECT_NEAR(report.M, M, 1e-9);
  EXPECT_NEAR(report.d, 2 * M * tv, 1e-9);
  EXPECT_TRUE(report.satisfied);
}

TEST(Prop1, RandomPairsSatisfied) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto inst = make_bound_instance(seed, 2 + seed % 9, 1 + seed % 5, 0.5, BoundMode::prop1);
    ASSERT_TRUE(verify_instance(inst, BoundMode::prop1).satisfied) << seed;
  }
}

TEST(Prop2, IdentityBijectionReproducesProp1) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p1 = make_bound_instance(seed, 6, 3, 0.5, BoundMode::prop1);
    auto p2 = make_bound_instance(seed, 6, 3, 0.5, BoundMode::prop2, true);
    const auto a = verify_instance(p1, BoundMode::prop1);
    const auto b = verify_instance(p2, BoundMode::prop2);
    EXPECT_EQ(a.d, b.d);
    EXPECT_EQ(a.M, b.M);
    EXPECT_EQ(a.max_observed_gap, b.max_observed_gap);
  }
}

TEST(Prop2, PureRelabelingHasZeroGap) {
  auto [mi, unused] = random_mdp_pair(4, 7, 2, 0.0, {RewardForm::state_next});
  ptl::numkit::Rng rng(4, 7);
  const auto g = StateBijection::from_forward(rng.permutation(7));
  const auto mj = relabel_states(mi, g);
  const auto pi_i = random_policy(7, 2, 4, 1);
  DetPolicy pi_j{std::vector<std::size_t>(7)};
  for (std::size_t s = 0; s < 7; ++s) pi_j.action_of[g(s)] = pi_i(s);
  auto report = prop2_verify(mi, mj, pi_i, pi_j, g);
  EXPECT_EQ(report.d, 0.0);
  EXPECT_LT(report.max_observed_gap, 1e-12);
  EXPECT_TRUE(report.satisfied);
}

TEST(Prop2, RejectsInconsistentRewards) {
  auto inst = make_bound_instance(9, 5, 2, 0.3, BoundMode::prop2);
  inst.mdp_j.r(0, 0, 1) += 1.0;
  inst.mdp_j.r(0, 1, 1) += 1.0;
  EXPECT_THROW((void)verify_instance(inst, BoundMode::prop2), ptl::PreconditionError);
}

TEST(Prop2, RandomRelabeledPerturbedPairsSatisfied) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto inst = make_bound_instance(seed, 2 + seed % 9, 1 + seed % 5, 0.5, BoundMode::prop2);
    ASSERT_TRUE(verify_instance(inst, BoundMode::prop2).satisfied) << seed;
  }
}

TEST(EquivalentAction, SameMdpReturnsSameAction) {
  auto [m, unused] = random_mdp_pair(10, 4, 3, 0.0);
  for (std::size_t a = 0; a < 3; ++a) {
    auto eq = find_equivalent_action(m, m, 1, a);
    EXPECT_EQ(eq.action, a);
    EXPECT_EQ(eq.reward_gap, 0.0);
    EXPECT_EQ(eq.tv_gap, 0.0);
  }
}

TEST(EquivalentAction, PermutedActionsAreRecovered) {
  auto [mj, unused] = random_mdp_pair(11, 4, 4, 0.0);
  const std::vector<std::size_t> sigma{2, 0, 3, 1};
  const auto mi = relabel_actions(mj, sigma);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t a = 0; a < 4; ++a) {
      auto eq = find_equivalent_action(mi, mj, s, a);
      EXPECT_EQ(eq.action, sigma[a]);
      EXPECT_EQ(eq.reward_gap, 0.0);
      EXPECT_EQ(eq.tv_gap, 0.0);
    }
}

TEST(EquivalentAction, CrippledActionLeavesResidualGap) {
  auto [mj, unused] = random_mdp_pair(12, 5, 3, 0.0);
  FiniteMdp mi = mj;
  // Action 1 of mdp_i becomes a no-op self-loop.
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t n = 0; n < 5; ++n) mi.p(s, 1, n) = n == s ? 1.0 : 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    auto eq = find_equivalent_action(mi, mj, s, 1);
    EXPECT_GT(std::max(eq.reward_gap, eq.tv_gap), kEquivalenceTolerance);
  }
}

TEST(TranslatePolicy, IdenticalMdps) {
  auto [m, unused] = random_mdp_pair(13, 6, 3, 0.0);
  const auto pi = random_policy(6, 3, 13, 1);
  EXPECT_EQ(brute_force_translate_policy(m, m, pi), pi);
}

TEST(TranslatePolicy, PermutedActionsGiveZeroValueGap) {
  auto [mj, unused] = random_mdp_pair(14, 6, 3, 0.0);
  const std::vector<std::size_t> sigma{1, 2, 0};
  const auto mi = relabel_actions(mj, sigma);
  const auto pi_j = random_policy(6, 3, 14, 1);
  const auto pi_i = brute_force_translate_policy(mi, mj, pi_j);
  for (std::size_t s = 0; s < 6; ++s) EXPECT_EQ(pi_i(s), sigma[pi_j(s)]);
  const auto vi = policy_value(mi, pi_i);
  const auto vj = policy_value(mj, pi_j);
  for (std::size_t s = 0; s < 6; ++s) EXPECT_EQ(vi[s], vj[s]);
}

TEST(TranslatePolicy, PerturbedPairWithinPolicyGapBound) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto [mj, mi] = random_mdp_pair(seed, 6, 3, 0.3);
    const auto pi_j = value_iteration(mj, 1e-10).greedy;
    const auto pi_i = brute_force_translate_policy(mi, mj, pi_j);
    EXPECT_TRUE(theorem1_d(mi, mj, pi_i, pi_j).satisfied);
  }
}

TEST(RandomMdpPair, ZeroPerturbationIsIdentical) {
  auto [a, b] = random_mdp_pair(20, 6, 3, 0.0);
  EXPECT_EQ(a, b);
  EXPECT_NO_THROW(a.validate());
}

TEST(RandomMdpPair, Deterministic) {
  EXPECT_EQ(random_mdp_pair(21, 5, 2, 0.4), random_mdp_pair(21, 5, 2, 0.4));
}

TEST(RandomMdpPair, FullPerturbationDecorrelatesRows) {
  auto [a, b] = random_mdp_pair(22, 10, 3, 1.0);
  b.validate();
  double total = 0;
  for (std::size_t s = 0; s < 10; ++s)
    for (std::size_t act = 0; act < 3; ++act) total += total_variation(a.next_distribution(s, act), b.next_distribution(s, act));
  EXPECT_GT(total / 30.0, 0.1);
}

TEST(RandomMdpPair, StateNextFormHasActionFreeRewards) {
  auto [a, b] = random_mdp_pair(23, 4, 3, 0.2, {RewardForm::state_next});
  EXPECT_TRUE(a.reward_depends_only_on_states());
  EXPECT_TRUE(b.reward_depends_only_on_states());
}
