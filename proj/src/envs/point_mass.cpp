#include "ptl/envs/point_mass.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ptl/errors.hpp"

namespace ptl::envs {

void PointMassParams::validate() const {
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (!(drag >= 0.0 && drag < 1.0)) throw DomainError("drag must lie in [0, 1)");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!std::isfinite(gain[0]) || !std::isfinite(gain[1]) || !std::isfinite(rotation) ||
      !std::isfinite(control_cost))
    throw DomainError("point-mass parameters must be finite");
  for (std::size_t d : crippled_dims)
    if (d >= kActionDim) throw DomainError("crippled dimension out of range");
}

std::string PointMassParams::describe() const {
  std::ostringstream os;
  os << "mass=" << mass << " drag=" << drag << " gain=(" << gain[0] << "," << gain[1] << ") rot="
     << rotation * 180.0 / M_PI << "deg";
  if (!crippled_dims.empty()) {
    os << " cripple=";
    for (std::size_t d : crippled_dims) os << d;
  }
  return os.str();
}

PointMassEnv::PointMassEnv(PointMassParams params, std::size_t horizon) : params_(std::move(params)), horizon_(horizon) {
  params_.validate();
  if (horizon == 0) throw DomainError("horizon must be positive");
}

EnvState PointMassEnv::reset(numkit::Rng& rng) {
  EnvState s;
  s.position[0] = rng.uniform(-kResetHalfWidth, kResetHalfWidth);
  s.position[1] = rng.uniform(-kResetHalfWidth, kResetHalfWidth);
  return s;
}

Action PointMassEnv::effective_action(const Action& action) const {
  Action a;
  for (std::size_t k = 0; k < kActionDim; ++k) a[k] = std::clamp(action[k], -1.0, 1.0);
  for (std::size_t d : params_.crippled_dims) a[d] = 0.0;
  return a;
}

StepResult PointMassEnv::step(const EnvState& state, const Action& action) {
  for (double v : action)
    if (!std::isfinite(v)) throw InputError("non-finite action");
  const Action a = effective_action(action);
  const double fx = params_.gain[0] * a[0];
  const double fy = params_.gain[1] * a[1];
  const double c = std::cos(params_.rotation);
  const double s = std::sin(params_.rotation);
  const double scale = params_.dt / params_.mass;

  StepResult out;
  out.next.velocity[0] = (1.0 - params_.drag) * state.velocity[0] + scale * (c * fx - s * fy);
  out.next.velocity[1] = (1.0 - params_.drag) * state.velocity[1] + scale * (s * fx + c * fy);
  out.next.position[0] = state.position[0] + params_.dt * out.next.velocity[0];
  out.next.position[1] = state.position[1] + params_.dt * out.next.velocity[1];
  out.next.step_index = state.step_index + 1;
  out.reward = out.next.velocity[0] - params_.control_cost * (a[0] * a[0] + a[1] * a[1]);
  out.done = out.next.step_index >= horizon_;
  return out;
}

DelayedRewardWrapper::DelayedRewardWrapper(Environment& inner, std::size_t delay_steps)
    : inner_(&inner), delay_(delay_steps) {
  if (delay_steps == 0) throw DomainError("delay_steps must be at least 1");
}

EnvState DelayedRewardWrapper::reset(numkit::Rng& rng) {
  accumulator_ = 0.0;
  return inner_->reset(rng);
}

StepResult DelayedRewardWrapper::step(const EnvState& state, const Action& action) {
  StepResult out = inner_->step(state, action);
  last_dense_ = out.reward;
  accumulator_ += out.reward;
  if (out.next.step_index % delay_ == 0 || out.done) {
    out.reward = accumulator_;
    accumulator_ = 0.0;
  } else {
    out.reward = 0.0;
  }
  return out;
}

Action full_throttle_action(const PointMassParams& params) {
  // x-acceleration per unit action: (cos * gain_x, -sin * gain_y).
  const double coef[2] = {std::cos(params.rotation) * params.gain[0], -std::sin(params.rotation) * params.gain[1]};
  Action a{};
  for (std::size_t k = 0; k < kActionDim; ++k) {
    if (std::abs(coef[k]) < 1e-12) continue;
    a[k] = coef[k] > 0.0 ? 1.0 : -1.0;
  }
  for (std::size_t d : params.crippled_dims) a[d] = 0.0;
  return a;
}

double full_throttle_return(const PointMassParams& params, std::size_t horizon) {
  PointMassEnv env(params, horizon);
  const Action a = full_throttle_action(params);
  EnvState s;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    auto r = env.step(s, a);
    total += r.reward;
    s = r.next;
  }
  return total;
}

}  // namespace ptl::envs
