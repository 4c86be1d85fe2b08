#include "ptl/numkit/adam.hpp"

#include <cmath>

#include "ptl/errors.hpp"
#include "ptl/numkit/mlp.hpp"

namespace ptl::numkit {

AdamState::AdamState(AdamConfig cfg, const std::vector<DenseArray>& params)
    : config(cfg), first_moment(zeros_like(params)), second_moment(zeros_like(params)) {}

void adam_step(std::vector<DenseArray>& params, const std::vector<DenseArray>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: parameter/gradient/moment list lengths differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k], grads[k], "adam_step");
    require_same_shape(params[k], state.first_moment[k], "adam_step moments");
  }
  const auto& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].values();
    auto g = grads[k].values();
    auto m = state.first_moment[k].values();
    auto v = state.second_moment[k].values();
    for (std::size_t e = 0; e < p.size(); ++e) {
      m[e] = c.beta1 * m[e] + (1.0 - c.beta1) * g[e];
      v[e] = c.beta2 * v[e] + (1.0 - c.beta2) * g[e] * g[e];
      const double m_hat = m[e] / bias1;
      const double v_hat = v[e] / bias2;
      p[e] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace ptl::numkit
