#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ptl/numkit/rng.hpp"

namespace ptl::envs {

inline constexpr std::size_t kStateDim = 4;   // px, py, vx, vy
inline constexpr std::size_t kActionDim = 2;

using Action = std::array<double, kActionDim>;
using Observation = std::array<double, kStateDim>;

struct PointMassParams {
  double mass = 1.0;
  double drag = 0.1;
  std::array<double, 2> gain{1.0, 1.0};
  double rotation = 0.0;  // radians
  std::vector<std::size_t> crippled_dims;
  double dt = 0.05;
  double control_cost = 0.0;

  /// Throws DomainError when an invariant fails.
  void validate() const;
  [[nodiscard]] std::string describe() const;
  friend bool operator==(const PointMassParams&, const PointMassParams&) = default;
};

struct EnvState {
  std::array<double, 2> position{0.0, 0.0};
  std::array<double, 2> velocity{0.0, 0.0};
  std::size_t step_index = 0;

  [[nodiscard]] Observation observation() const { return {position[0], position[1], velocity[0], velocity[1]}; }
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
};

/// Interface shared by the raw point mass and the delayed-reward wrapper.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvState reset(numkit::Rng& rng) = 0;
  virtual StepResult step(const EnvState& state, const Action& action) = 0;
  [[nodiscard]] virtual std::size_t horizon() const = 0;
};

/// Planar point mass with rotated, scaled and optionally crippled actuators.
///
///   v' = (1 - drag) v + dt R(rotation) (gain * a) / mass
///   p' = p + dt v'
///   r  = v'_x - c |a|^2
class PointMassEnv : public Environment {
 public:
  static constexpr double kResetHalfWidth = 1.0;

  PointMassEnv(PointMassParams params, std::size_t horizon);

  EnvState reset(numkit::Rng& rng) override;
  StepResult step(const EnvState& state, const Action& action) override;
  [[nodiscard]] std::size_t horizon() const override { return horizon_; }
  [[nodiscard]] const PointMassParams& params() const { return params_; }

  /// Action after clamping to [-1, 1] and zeroing crippled dimensions.
  [[nodiscard]] Action effective_action(const Action& action) const;

 private:
  PointMassParams params_;
  std::size_t horizon_;
};

/// Dense rewards accumulated and released every n steps or at episode end.
class DelayedRewardWrapper : public Environment {
 public:
  DelayedRewardWrapper(Environment& inner, std::size_t delay_steps);

  EnvState reset(numkit::Rng& rng) override;
  StepResult step(const EnvState& state, const Action& action) override;
  [[nodiscard]] std::size_t horizon() const override { return inner_->horizon(); }

  [[nodiscard]] double accumulator() const { return accumulator_; }
  [[nodiscard]] std::size_t delay_steps() const { return delay_; }
  /// Dense reward of the most recent step.
  [[nodiscard]] double last_dense_reward() const { return last_dense_; }

 private:
  Environment* inner_;
  std::size_t delay_;
  double accumulator_ = 0.0;
  double last_dense_ = 0.0;
};

/// x-force maximizing action: each dimension at +-1 following the sign of its
/// contribution to the x acceleration, 0 for crippled or orthogonal actuators.
[[nodiscard]] Action full_throttle_action(const PointMassParams& params);

/// Episode reward of full_throttle_action held for `horizon` steps from rest
/// (c = 0 makes this the maximum achievable dense episode reward).
[[nodiscard]] double full_throttle_return(const PointMassParams& params, std::size_t horizon);

}  // namespace ptl::envs
