#include <cmath>

#include <gtest/gtest.h>

#include "ptl/envs/point_mass.hpp"
#include "ptl/envs/task_set.hpp"
#include "ptl/errors.hpp"
#include "ptl/models/history.hpp"

using namespace ptl::envs;
using ptl::numkit::Rng;

namespace {

PointMassParams bare_params() {
  PointMassParams p;
  p.mass = 1.0;
  p.drag = 0.0;
  p.dt = 0.05;
  return p;
}

// Scripted environment emitting dense reward t+1 at step t.
class CountingEnv : public Environment {
 public:
  explicit CountingEnv(std::size_t horizon) : horizon_(horizon) {}
  EnvState reset(Rng&) override { return {}; }
  StepResult step(const EnvState& s, const Action&) override {
    StepResult r;
    r.next = s;
    r.next.step_index = s.step_index + 1;
    r.reward = static_cast<double>(r.next.step_index);
    r.done = r.next.step_index == horizon_;
    return r;
  }
  std::size_t horizon() const override { return horizon_; }

 private:
  std::size_t horizon_;
};

}  // namespace

TEST(PointMassParams, Validation) {
  PointMassParams p;
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), ptl::DomainError);
  p = {};
  p.drag = 1.0;
  EXPECT_THROW(p.validate(), ptl::DomainError);
  p = {};
  p.crippled_dims = {2};
  EXPECT_THROW(p.validate(), ptl::DomainError);
}

TEST(Reset, DeterministicGivenSeed) {
  PointMassEnv env({}, 200);
  Rng a(3), b(3);
  EXPECT_EQ(env.reset(a), env.reset(b));
}

TEST(Reset, VelocityZeroAndMeanAtBoxCenter) {
  PointMassEnv env({}, 200);
  Rng rng(4);
  double mx = 0, my = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto s = env.reset(rng);
    EXPECT_EQ(s.velocity[0], 0.0);
    EXPECT_EQ(s.velocity[1], 0.0);
    EXPECT_EQ(s.step_index, 0u);
    mx += s.position[0];
    my += s.position[1];
  }
  EXPECT_LT(std::abs(mx / n), 0.02);
  EXPECT_LT(std::abs(my / n), 0.02);
}

TEST(Step, ZeroActionAtRestOnlyAdvancesClock) {
  PointMassEnv env({}, 200);
  EnvState s;
  s.position = {0.3, -0.2};
  auto r = env.step(s, {0.0, 0.0});
  EXPECT_EQ(r.next.position, s.position);
  EXPECT_EQ(r.next.velocity, s.velocity);
  EXPECT_EQ(r.next.step_index, 1u);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(Step, UnitXActionHandEvaluation) {
  PointMassEnv env(bare_params(), 200);
  auto r = env.step({}, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(r.next.velocity[0], 0.05);
  EXPECT_EQ(r.next.velocity[1], 0.0);
  EXPECT_DOUBLE_EQ(r.reward, 0.05);
  EXPECT_DOUBLE_EQ(r.next.position[0], 0.05 * 0.05);
}

TEST(Step, ControlCostSubtracted) {
  auto p = bare_params();
  p.control_cost = 0.1;
  PointMassEnv env(p, 200);
  auto r = env.step({}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(r.reward, 0.05 - 0.1 * 2.0);
}

TEST(Step, CrippledDimensionHasNoEffect) {
  auto p = bare_params();
  p.crippled_dims = {0};
  p.rotation = 0.4;
  PointMassEnv env(p, 200);
  EnvState s;
  s.velocity = {0.1, 0.2};
  for (double ax : {-1.0, -0.3, 0.7, 1.0})
    EXPECT_EQ(env.step(s, {ax, 0.5}).next, env.step(s, {0.0, 0.5}).next);
}

TEST(Step, NonFiniteActionIsInputError) {
  PointMassEnv env({}, 200);
  EXPECT_THROW(env.step({}, {NAN, 0.0}), ptl::InputError);
}

TEST(Step, DoneAtHorizon) {
  PointMassEnv env({}, 3);
  EnvState s;
  for (int t = 0; t < 3; ++t) {
    auto r = env.step(s, {0.1, 0.1});
    EXPECT_EQ(r.done, t == 2);
    s = r.next;
  }
}

TEST(Step, LargerMassGivesSmallerSpeed) {
  Rng rng(5);
  std::vector<Action> actions(50);
  for (auto& a : actions) a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto light = bare_params(), heavy = bare_params();
  light.drag = heavy.drag = 0.1;
  heavy.mass = 2.0;
  PointMassEnv e1(light, 50), e2(heavy, 50);
  EnvState s1, s2;
  for (const auto& a : actions) {
    s1 = e1.step(s1, a).next;
    s2 = e2.step(s2, a).next;
    EXPECT_LE(std::hypot(s2.velocity[0], s2.velocity[1]), std::hypot(s1.velocity[0], s1.velocity[1]) + 1e-15);
  }
}

TEST(Step, RotationEquivariance) {
  const double theta = 0.7;
  Rng rng(6);
  auto base = bare_params(), rotated = bare_params();
  base.drag = rotated.drag = 0.1;
  rotated.rotation = theta;
  PointMassEnv e0(base, 40), e1(rotated, 40);
  EnvState s0, s1, s2;
  const double c = std::cos(theta), s = std::sin(theta);
  for (int t = 0; t < 40; ++t) {
    // Keep actions small so the counter-rotated action stays inside the box.
    Action a{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
    Action counter{c * a[0] + s * a[1], -s * a[0] + c * a[1]};
    s0 = e0.step(s0, a).next;
    s1 = e1.step(s1, counter).next;
    s2 = e1.step(s2, a).next;
    EXPECT_NEAR(s1.velocity[0], s0.velocity[0], 1e-14);
    EXPECT_NEAR(s1.velocity[1], s0.velocity[1], 1e-14);
    // Same actions under the rotated actuator: the velocity rotates by theta.
    EXPECT_NEAR(s2.velocity[0], c * s0.velocity[0] - s * s0.velocity[1], 1e-14);
    EXPECT_NEAR(s2.velocity[1], s * s0.velocity[0] + c * s0.velocity[1], 1e-14);
  }
}

TEST(DelayedReward, UnitDelayIsDense) {
  CountingEnv inner(5);
  DelayedRewardWrapper w(inner, 1);
  Rng rng(0);
  auto s = w.reset(rng);
  for (int t = 0; t < 5; ++t) {
    auto r = w.step(s, {});
    EXPECT_EQ(r.reward, t + 1.0);
    s = r.next;
  }
}

TEST(DelayedReward, FullHorizonDelayEmitsOnce) {
  CountingEnv inner(6);
  DelayedRewardWrapper w(inner, 6);
  Rng rng(0);
  auto s = w.reset(rng);
  std::vector<double> emitted;
  for (int t = 0; t < 6; ++t) {
    auto r = w.step(s, {});
    emitted.push_back(r.reward);
    s = r.next;
  }
  EXPECT_EQ(emitted, (std::vector<double>{0, 0, 0, 0, 0, 21}));
}

TEST(DelayedReward, HandAccumulationN3) {
  CountingEnv inner(7);
  DelayedRewardWrapper w(inner, 3);
  Rng rng(0);
  auto s = w.reset(rng);
  std::vector<double> emitted;
  for (int t = 0; t < 7; ++t) {
    auto r = w.step(s, {});
    emitted.push_back(r.reward);
    s = r.next;
  }
  EXPECT_EQ(emitted, (std::vector<double>{0, 0, 6, 0, 0, 15, 7}));
  EXPECT_EQ(w.accumulator(), 0.0);
}

TEST(DelayedReward, ConservesEpisodeReward) {
  Rng rng(7);
  for (std::size_t n : {1, 3, 50, 200}) {
    for (int ep = 0; ep < 20; ++ep) {
      PointMassParams p;
      p.mass = rng.uniform(0.3, 3.0);
      p.rotation = rng.uniform(-3, 3);
      p.control_cost = 0.05;
      TaskEnv task(p, 200, n);
      auto trace = rollout(task.env(), [&](const Observation&, std::span<const double>) {
        return Action{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      }, 200, rng);
      double dense = 0;
      for (double r : trace.dense_rewards) dense += r;
      EXPECT_NEAR(trace.episode_reward(), dense, 1e-12);
    }
  }
}

TEST(Rollout, ZeroPolicyEarnsNothing) {
  PointMassEnv env({}, 200);
  Rng rng(1);
  auto trace = rollout(env, [](const Observation&, std::span<const double>) { return Action{0.0, 0.0}; }, 200, rng);
  EXPECT_EQ(trace.length(), 200u);
  EXPECT_EQ(trace.episode_reward(), 0.0);
  EXPECT_TRUE(trace.dones.back());
}

TEST(Rollout, ConstantThrustMatchesClosedForm) {
  PointMassParams p;
  p.drag = 0.1;
  p.mass = 1.5;
  const std::size_t T = 200;
  PointMassEnv env(p, T);
  Rng rng(2);
  auto trace = rollout(env, [](const Observation&, std::span<const double>) { return Action{1.0, 0.0}; }, T, rng);
  // v_t = (1-drag) v_{t-1} + k  =>  sum_{t=1..T} v_t = (k/drag) (T - (1-drag)(1-(1-drag)^T)/drag)
  const double k = p.dt / p.mass, q = 1.0 - p.drag;
  const double expected = k / p.drag * (T - q * (1.0 - std::pow(q, T)) / p.drag);
  EXPECT_NEAR(trace.episode_reward(), expected, 1e-10);
  EXPECT_NEAR(full_throttle_return(p, T), expected, 1e-10);
}

TEST(Rollout, Deterministic) {
  PointMassEnv env({}, 50);
  auto run = [&] {
    Rng rng(9);
    Rng policy_rng(10);
    return rollout(env, [&](const Observation&, std::span<const double>) {
      return Action{policy_rng.uniform(-1, 1), policy_rng.uniform(-1, 1)};
    }, 50, rng);
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.histories, b.histories);
}

TEST(Rollout, HistoriesAreZeroPaddedDeltas) {
  PointMassEnv env({}, 20);
  Rng rng(3);
  auto trace = rollout(env, [](const Observation&, std::span<const double>) { return Action{0.5, -0.5}; }, 20, rng, 3);
  ASSERT_EQ(trace.histories[0].size(), 18u);
  for (double v : trace.histories[0]) EXPECT_EQ(v, 0.0);
  // At t=1 the newest (last) slot holds s1 - s0 and a0; older slots stay zero.
  const auto& h = trace.histories[1];
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(h[k], 0.0);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(h[12 + d], trace.observations[1][d] - trace.observations[0][d]);
  EXPECT_EQ(h[16], 0.5);
  EXPECT_EQ(h[17], -0.5);
}

TEST(Rollout, NonFinitePolicyOutputIsInputError) {
  PointMassEnv env({}, 5);
  Rng rng(3);
  EXPECT_THROW(rollout(env, [](const Observation&, std::span<const double>) { return Action{INFINITY, 0.0}; }, 5, rng),
               ptl::InputError);
}

TEST(HistoryWindow, KeepsLastK) {
  ptl::models::HistoryWindow w(2, 1, 1);
  std::vector<double> s0{0}, s1{1}, s2{3}, s3{6}, a{9};
  w.push(s0, a, s1);
  w.push(s1, a, s2);
  w.push(s2, a, s3);
  EXPECT_EQ(w.flat(), (std::vector<double>{2, 9, 3, 9}));
}

TEST(TaskSet, DefaultIsValidAndDisjoint) {
  auto set = default_task_set();
  EXPECT_NO_THROW(set.validate());
  EXPECT_EQ(set.n_train(), 5u);
  set.test_params.push_back(set.train_params[1]);
  EXPECT_THROW(set.validate(), ptl::DomainError);
}

TEST(FullThrottle, FollowsXCoefficientSigns) {
  PointMassParams p;
  p.rotation = M_PI / 2;  // x-force comes only from -a_y
  auto a = full_throttle_action(p);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_EQ(a[1], -1.0);
  p.rotation = 0.0;
  p.gain = {-0.5, 1.0};
  a = full_throttle_action(p);
  EXPECT_EQ(a[0], -1.0);
  EXPECT_EQ(a[1], 0.0);
}
