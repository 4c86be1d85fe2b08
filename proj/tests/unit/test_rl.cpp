#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "ptl/errors.hpp"
#include "ptl/numkit/persist.hpp"
#include "ptl/rl/buffers.hpp"
#include "ptl/rl/td3.hpp"

using namespace ptl;
using numkit::DenseArray;
using numkit::Rng;

namespace {

// Oracle: direct sum R_t = sum_k gamma^(k-t) r_k.
std::vector<double> returns_by_sum(const std::vector<double>& r, double gamma) {
  std::vector<double> out(r.size(), 0.0);
  for (std::size_t t = 0; t < r.size(); ++t)
    for (std::size_t k = t; k < r.size(); ++k) out[t] += std::pow(gamma, static_cast<double>(k - t)) * r[k];
  return out;
}

void add_step(rl::ReplayBuffer& buf, double value, std::uint64_t episode, std::size_t step, std::size_t task = 0) {
  const std::vector<double> s{value, value}, a{value}, ns{value + 1, value + 1}, w{value, value, value};
  buf.add({s, a, value, ns, w, task, episode, step});
}

// Critic whose output is the constant `c` regardless of input.
void make_constant(numkit::Mlp& q, double c) {
  auto& p = q.parameters();
  for (double& v : p[p.size() - 2].values()) v = 0.0;
  p.back()(0, 0) = c;
}

rl::Td3Config tiny_config() {
  rl::Td3Config cfg;
  cfg.hidden = {8, 8};
  return cfg;
}

DenseArray gaussian(Rng& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
  DenseArray a = DenseArray::matrix(rows, cols);
  for (double& v : a.values()) v = rng.gaussian(0.0, sd);
  return a;
}

}  // namespace

TEST(Returns, HandRecursion) {
  const std::vector<double> r{0, 0, 1};
  const auto got = rl::compute_returns(r, 0.5);
  EXPECT_DOUBLE_EQ(got[0], 0.25);
  EXPECT_DOUBLE_EQ(got[1], 0.5);
  EXPECT_DOUBLE_EQ(got[2], 1.0);
}

TEST(Returns, ZeroRewardsAndZeroGamma) {
  for (double v : rl::compute_returns(std::vector<double>(5, 0.0), 0.9)) EXPECT_EQ(v, 0.0);
  const std::vector<double> r{1.5, -2.0, 3.0};
  EXPECT_EQ(rl::compute_returns(r, 0.0), r);
}

TEST(Returns, MatchesDirectSum) {
  Rng rng(3);
  std::vector<double> r(40);
  for (double& v : r) v = rng.uniform(-1, 1);
  const auto got = rl::compute_returns(r, 0.97);
  const auto want = returns_by_sum(r, 0.97);
  for (std::size_t t = 0; t < r.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
}

TEST(ReplayBuffer, FifoEviction) {
  rl::ReplayBuffer buf(3, 2, 1, 3);
  for (int k = 0; k < 5; ++k) add_step(buf, k, 0, static_cast<std::size_t>(k));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.state(0)[0], 2.0);
  EXPECT_EQ(buf.state(2)[0], 4.0);
  const auto sample = buf.gather({0, 1, 2});
  EXPECT_EQ(sample.rewards(0, 0), 2.0);
  EXPECT_EQ(sample.next_states(2, 1), 5.0);
  EXPECT_EQ(sample.windows.cols(), 3u);
}

TEST(ReplayBuffer, RejectsBadRecords) {
  rl::ReplayBuffer buf(3, 2, 1, 3);
  Rng rng(1);
  EXPECT_THROW((void)buf.sample_indices(1, rng), StateError);
  const std::vector<double> s{1.0}, a{0.0}, ns{1, 1}, w{0, 0, 0};
  EXPECT_THROW(buf.add({s, a, 0.0, ns, w, 0, 0, 0}), DimensionError);
  const std::vector<double> s2{1, 1};
  EXPECT_THROW(buf.add({s2, a, std::nan(""), ns, w, 0, 0, 0}), NumericError);
}

TEST(ReplayBuffer, UniformSamplingChiSquare) {
  constexpr std::size_t n = 100;
  rl::ReplayBuffer buf(n, 2, 1, 3);
  for (std::size_t k = 0; k < n + 37; ++k) add_step(buf, static_cast<double>(k), 0, k);
  Rng rng(11);
  std::vector<double> counts(n, 0.0);
  const std::size_t draws = 100000;
  for (std::size_t i : buf.sample_indices(draws, rng)) counts[i] += 1.0;
  const double expected = static_cast<double>(draws) / n;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99% quantile of chi-square with 99 degrees of freedom
  EXPECT_LT(chi2, 134.642);
}

TEST(ReplayBuffer, SegmentsStayInsideEpisodes) {
  rl::ReplayBuffer buf(64, 2, 1, 3);
  std::uint64_t episode = 0;
  for (std::size_t k = 0; k < 80; ++k) {
    const std::size_t step = k % 7;
    if (step == 0) ++episode;
    add_step(buf, static_cast<double>(k), episode, step, 2);
  }
  Rng rng(5);
  const auto starts = buf.sample_segment_starts(200, 4, rng);
  for (std::size_t s : starts) {
    EXPECT_EQ(buf.episode(s), buf.episode(s + 3));
    EXPECT_EQ(buf.step(s + 3), buf.step(s) + 3);
  }
  const auto batch = buf.gather_segments({starts[0]}, 4, 2);
  EXPECT_EQ(batch.states.rows(), 4u);
  EXPECT_EQ(batch.task_labels, std::vector<std::size_t>{2});
  EXPECT_EQ(batch.states(1, 0), buf.state(starts[0] + 1)[0]);
  EXPECT_EQ(batch.windows(0, 0), buf.window(starts[0])[0]);
  EXPECT_THROW((void)buf.sample_segment_starts(1, 8, rng), StateError);
}

TEST(ReplayBuffer, CheckpointRoundTrip) {
  rl::ReplayBuffer buf(10, 2, 1, 3);
  for (std::size_t k = 0; k < 13; ++k) add_step(buf, 0.1 * static_cast<double>(k), 1, k);
  numkit::Checkpoint ckpt;
  buf.save(ckpt, "replay/0");
  const auto dir = std::filesystem::temp_directory_path() / "ptl_replay_roundtrip";
  std::filesystem::remove_all(dir);
  ckpt.save(dir);
  rl::ReplayBuffer back(10, 2, 1, 3);
  back.load(numkit::Checkpoint::load(dir), "replay/0");
  ASSERT_EQ(back.size(), buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(back.state(i)[0], buf.state(i)[0]);
    EXPECT_EQ(back.step(i), buf.step(i));
  }
  std::filesystem::remove_all(dir);
}

TEST(SilBuffer, StoresEpisodeReturns) {
  rl::SilBuffer buf(8, 1, 1, 2);
  const std::vector<std::vector<double>> s{{0}, {1}, {2}}, a{{0}, {0}, {0}}, w{{0, 0}, {0, 0}, {0, 0}};
  const std::vector<double> r{0, 0, 1};
  buf.add_episode(s, a, w, r, 0.5, 0);
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_DOUBLE_EQ(buf.stored_return(0), 0.25);
  EXPECT_DOUBLE_EQ(buf.stored_return(2), 1.0);
  Rng rng(1);
  const auto sample = buf.sample(16, rng);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double state = sample.states(i, 0);
    EXPECT_DOUBLE_EQ(sample.returns(i, 0), returns_by_sum(r, 0.5)[static_cast<std::size_t>(state)]);
  }
  const std::vector<double> short_r{1.0};
  EXPECT_THROW(buf.add_episode(s, a, w, short_r, 0.5, 0), DimensionError);
}

TEST(Td3, DefaultsMatchReferenceTable) {
  const rl::Td3Config cfg;
  EXPECT_EQ(cfg.batch_size, 256u);
  EXPECT_EQ(cfg.gamma, 0.99);
  EXPECT_EQ(cfg.tau, 5e-3);
  EXPECT_EQ(cfg.policy_noise, 0.2);
  EXPECT_EQ(cfg.noise_clip, 0.5);
  EXPECT_EQ(cfg.policy_frequency, 2u);
  EXPECT_EQ(cfg.actor_lr, 3e-4);
  EXPECT_EQ(cfg.critic_lr, 3e-4);
  EXPECT_EQ(cfg.exploration_sigma, 0.1);
}

TEST(Td3, ZeroGammaTargetIsReward) {
  Rng rng(2);
  auto cfg = tiny_config();
  cfg.gamma = 0.0;
  rl::ActorCritic ac(4, 2, 3, cfg, rng);
  const DenseArray r = gaussian(rng, 5, 1);
  const DenseArray y = rl::td3_targets(ac, cfg, r, gaussian(rng, 5, 4), gaussian(rng, 5, 3), rng);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(y(i, 0), r(i, 0));
}

TEST(Td3, TargetUsesMinimumOfTwinTargets) {
  Rng rng(4);
  auto cfg = tiny_config();
  rl::ActorCritic ac(4, 2, 3, cfg, rng);
  make_constant(ac.q1_target, 2.0);
  make_constant(ac.q2_target, -1.0);
  const DenseArray r = DenseArray::matrix(3, 1, 0.5);
  const DenseArray y = rl::td3_targets(ac, cfg, r, gaussian(rng, 3, 4), gaussian(rng, 3, 3), rng);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y(i, 0), 0.5 - 0.99, 1e-15);
}

TEST(Td3, TwinCriticSymmetry) {
  Rng rng(6);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  ac.q2.set_parameters(ac.q1.parameters());
  const DenseArray s = gaussian(rng, 7, 4), a = gaussian(rng, 7, 2), z = gaussian(rng, 7, 3), y = gaussian(rng, 7, 1);
  const auto r = rl::td3_critic_loss(ac, s, a, z, y);
  EXPECT_EQ(numkit::fingerprint(r.q1_grads), numkit::fingerprint(r.q2_grads));
  std::swap(ac.q1, ac.q2);
  EXPECT_EQ(rl::td3_critic_loss(ac, s, a, z, y).loss, r.loss);
}

TEST(Td3, WidthOneNetworksByHand) {
  Rng rng(8);
  rl::Td3Config cfg;
  cfg.hidden = {1};
  rl::ActorCritic ac(1, 1, 1, cfg, rng);
  // Q1(x) = 2 relu(0.5 s + a - z + 0.1) - 0.3 ; Q2(x) = -relu(s) + 1
  ac.q1.set_parameters({DenseArray::from_rows({{0.5}, {1.0}, {-1.0}}), DenseArray::vector({0.1}),
                        DenseArray::from_rows({{2.0}}), DenseArray::vector({-0.3})});
  ac.q2.set_parameters({DenseArray::from_rows({{1.0}, {0.0}, {0.0}}), DenseArray::vector({0.0}),
                        DenseArray::from_rows({{-1.0}}), DenseArray::vector({1.0})});
  const DenseArray s = DenseArray::from_rows({{0.4}}), a = DenseArray::from_rows({{0.3}}),
                   z = DenseArray::from_rows({{0.2}}), y = DenseArray::from_rows({{1.5}});
  const double q1 = 2.0 * (0.2 + 0.3 - 0.2 + 0.1) - 0.3;  // 0.5
  const double q2 = -0.4 + 1.0;                            // 0.6
  const double want = (1.5 - q1) * (1.5 - q1) + (1.5 - q2) * (1.5 - q2);
  EXPECT_NEAR(rl::td3_critic_loss(ac, s, a, z, y).loss, want, 1e-14);
}

TEST(Sil, DominatedReturnsGiveZeroLossAndGradient) {
  Rng rng(9);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  make_constant(ac.q1, 5.0);
  make_constant(ac.q2, 4.0);
  const DenseArray ret = DenseArray::from_rows({{3.9}, {-1.0}, {4.0}});
  const auto r = rl::sil_loss(ac, gaussian(rng, 3, 4), gaussian(rng, 3, 2), gaussian(rng, 3, 3), ret);
  EXPECT_EQ(r.loss, 0.0);
  for (const auto* grads : {&r.q1_grads, &r.q2_grads})
    for (const auto& g : *grads)
      for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Sil, OneUnitAdvantageContributesTwo) {
  Rng rng(10);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  make_constant(ac.q1, 2.0);
  make_constant(ac.q2, 2.0);
  const DenseArray ret = DenseArray::from_rows({{3.0}});
  const auto r = rl::sil_loss(ac, gaussian(rng, 1, 4), gaussian(rng, 1, 2), gaussian(rng, 1, 3), ret);
  EXPECT_DOUBLE_EQ(r.loss, 2.0);
}

TEST(Sil, NonNegative) {
  Rng rng(12);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = rl::sil_loss(ac, gaussian(rng, 9, 4), gaussian(rng, 9, 2), gaussian(rng, 9, 3),
                                gaussian(rng, 9, 1, 3.0));
    EXPECT_GE(r.loss, 0.0);
  }
}

TEST(Actor, ConstantCriticGivesZeroGradient) {
  Rng rng(13);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  make_constant(ac.q1, 1.7);
  const auto r = rl::actor_update(ac, gaussian(rng, 6, 4), gaussian(rng, 6, 3));
  EXPECT_DOUBLE_EQ(r.objective, 1.7);
  for (const auto& g : r.actor_grads)
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Actor, BowlCriticPullsActionsToZero) {
  Rng rng(14);
  rl::Td3Config cfg;
  cfg.hidden = {4, 4};
  cfg.actor_lr = 1e-2;
  rl::ActorCritic ac(2, 2, 1, cfg, rng);
  // Q1 = -(|a_0| + |a_1|) built from relu(+-a_k); first hidden layer reads only the action columns.
  DenseArray w0 = DenseArray::matrix(5, 4);
  w0(2, 0) = 1;
  w0(2, 1) = -1;
  w0(3, 2) = 1;
  w0(3, 3) = -1;
  DenseArray w1 = DenseArray::matrix(4, 4);
  for (std::size_t k = 0; k < 4; ++k) w1(k, k) = 1;
  ac.q1.set_parameters({w0, DenseArray::vector(std::vector<double>(4, 0.0)), w1,
                        DenseArray::vector(std::vector<double>(4, 0.0)), DenseArray::matrix(4, 1, -1.0),
                        DenseArray::vector({0.0})});
  // Push the actor off-centre first.
  for (double& v : ac.actor.parameters().back().values()) v = 0.8;
  const DenseArray s = gaussian(rng, 32, 2, 0.5), z = gaussian(rng, 32, 1, 0.5);
  auto mean_abs = [&] {
    double m = 0.0;
    const DenseArray acts = rl::policy_actions(ac.actor, s, z);
    for (double v : acts.values()) m += std::abs(v);
    return m / 64.0;
  };
  const double before = mean_abs();
  const auto q_before = numkit::fingerprint(ac.q1.parameters());
  for (int step = 0; step < 100; ++step) {
    const auto r = rl::actor_update(ac, s, z);
    numkit::adam_step(ac.actor.parameters(), r.actor_grads, ac.actor_opt);
  }
  EXPECT_LT(mean_abs(), 0.5 * before);
  EXPECT_EQ(numkit::fingerprint(ac.q1.parameters()), q_before);
}

TEST(SoftUpdate, Extremes) {
  Rng rng(15);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  numkit::Mlp target = ac.q2;
  rl::soft_update(ac.q1, target, 0.0);
  EXPECT_EQ(numkit::fingerprint(target.parameters()), numkit::fingerprint(ac.q2.parameters()));
  rl::soft_update(ac.q1, target, 1.0);
  EXPECT_EQ(numkit::fingerprint(target.parameters()), numkit::fingerprint(ac.q1.parameters()));
}

TEST(SoftUpdate, GeometricConvergence) {
  Rng rng(16);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  numkit::Mlp target = ac.q2;
  const double tau = 0.05;
  const double w0 = target.parameters()[0](1, 1), online = ac.q1.parameters()[0](1, 1);
  for (int n = 1; n <= 50; ++n) {
    rl::soft_update(ac.q1, target, tau);
    const double want = online + (w0 - online) * std::pow(1.0 - tau, n);
    EXPECT_NEAR(target.parameters()[0](1, 1), want, 1e-12);
  }
  numkit::Mlp bad = ac.actor;
  EXPECT_THROW(rl::soft_update(ac.q1, bad, tau), DimensionError);
}

TEST(Explore, NoiseStatisticsAndBounds) {
  Rng rng(17);
  rl::ActorCritic ac(4, 2, 3, tiny_config(), rng);
  auto& p = ac.actor.parameters();
  for (double& v : p[p.size() - 2].values()) v = 0.0;
  p.back()(0, 0) = 0.1;  // interior mean action tanh(0.1)
  const std::vector<double> s{0.3, -0.2, 0.1, 0.0}, z{0.5, 0.5, 0.5};
  const double mean = std::tanh(0.1);
  EXPECT_EQ(rl::explore_action(ac.actor, s, z, rng, 0.0)[0], mean);
  double sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto a = rl::explore_action(ac.actor, s, z, rng, 0.1);
    sq += (a[0] - mean) * (a[0] - mean);
  }
  EXPECT_NEAR(std::sqrt(sq / n), 0.1, 0.005);
  for (int i = 0; i < 1000; ++i)
    for (double v : rl::explore_action(ac.actor, s, z, rng, 5.0)) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Td3, ActorStepsEveryOtherCriticStep) {
  Rng rng(18);
  auto cfg = tiny_config();
  rl::ActorCritic ac(4, 2, 3, cfg, rng);
  const DenseArray s = gaussian(rng, 8, 4), a = gaussian(rng, 8, 2), z = gaussian(rng, 8, 3), r = gaussian(rng, 8, 1),
                   ns = gaussian(rng, 8, 4);
  const auto actor0 = numkit::fingerprint(ac.actor.parameters());
  const auto target0 = numkit::fingerprint(ac.q1_target.parameters());
  auto st = rl::td3_update(ac, cfg, s, a, r, ns, z, rng);
  EXPECT_FALSE(st.actor_updated);
  EXPECT_EQ(numkit::fingerprint(ac.actor.parameters()), actor0);
  EXPECT_EQ(numkit::fingerprint(ac.q1_target.parameters()), target0);
  st = rl::td3_update(ac, cfg, s, a, r, ns, z, rng);
  EXPECT_TRUE(st.actor_updated);
  EXPECT_NE(numkit::fingerprint(ac.actor.parameters()), actor0);
  EXPECT_NE(numkit::fingerprint(ac.q1_target.parameters()), target0);
  EXPECT_EQ(ac.q1_opt.step_count, 2);
  EXPECT_EQ(ac.actor_opt.step_count, 1);
}

TEST(Td3, CheckpointRoundTripIsBitExact) {
  Rng rng(19);
  auto cfg = tiny_config();
  rl::ActorCritic ac(4, 2, 3, cfg, rng);
  const DenseArray s = gaussian(rng, 8, 4), a = gaussian(rng, 8, 2), z = gaussian(rng, 8, 3), r = gaussian(rng, 8, 1);
  for (int k = 0; k < 3; ++k) (void)rl::td3_update(ac, cfg, s, a, r, s, z, rng);
  numkit::Checkpoint ckpt;
  ac.save(ckpt, "agent/");
  numkit::save_rng(ckpt, "train", rng);
  const auto dir = std::filesystem::temp_directory_path() / "ptl_td3_roundtrip";
  std::filesystem::remove_all(dir);
  ckpt.save(dir);

  Rng other(99);
  rl::ActorCritic back(4, 2, 3, cfg, other);
  const auto loaded = numkit::Checkpoint::load(dir);
  back.load(loaded, "agent/");
  numkit::load_rng(loaded, "train", other);
  EXPECT_EQ(back.critic_updates, 3u);
  for (int k = 0; k < 3; ++k) {
    (void)rl::td3_update(ac, cfg, s, a, r, s, z, rng);
    (void)rl::td3_update(back, cfg, s, a, r, s, z, other);
  }
  EXPECT_EQ(numkit::fingerprint(ac.actor.parameters()), numkit::fingerprint(back.actor.parameters()));
  EXPECT_EQ(numkit::fingerprint(ac.q2_target.parameters()), numkit::fingerprint(back.q2_target.parameters()));
  EXPECT_EQ(numkit::fingerprint(ac.q1_opt.second_moment), numkit::fingerprint(back.q1_opt.second_moment));
  std::filesystem::remove_all(dir);
}

TEST(Td3, SilGradientsAddToCriticStep) {
  Rng rng(20);
  auto cfg = tiny_config();
  rl::ActorCritic a(4, 2, 3, cfg, rng);
  rl::ActorCritic b = a;
  const DenseArray s = gaussian(rng, 8, 4), act = gaussian(rng, 8, 2), z = gaussian(rng, 8, 3),
                   r = gaussian(rng, 8, 1), ret = gaussian(rng, 8, 1, 5.0);
  const rl::SilBatch sil{s, act, z, ret};
  Rng ra(1), rb(1);
  const auto st = rl::td3_update(a, cfg, s, act, r, s, z, ra, &sil);
  EXPECT_GT(st.sil_loss, 0.0);
  // Oracle: same step assembled by hand.
  const DenseArray y = rl::td3_targets(b, cfg, r, s, z, rb);
  auto g = rl::td3_critic_loss(b, s, act, z, y);
  const auto extra = rl::sil_loss(b, s, act, z, ret);
  numkit::accumulate(g.q1_grads, extra.q1_grads);
  numkit::adam_step(b.q1.parameters(), g.q1_grads, b.q1_opt);
  EXPECT_EQ(numkit::fingerprint(a.q1.parameters()), numkit::fingerprint(b.q1.parameters()));
}
