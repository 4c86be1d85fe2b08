#pragma once

#include <cstdint>
#include <vector>

#include "ptl/numkit/dense_array.hpp"

namespace ptl::numkit {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, const std::vector<DenseArray>& params);

  AdamConfig config;
  std::int64_t step_count = 0;
  std::vector<DenseArray> first_moment;
  std::vector<DenseArray> second_moment;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::vector<DenseArray>& params, const std::vector<DenseArray>& grads, AdamState& state);

}  // namespace ptl::numkit
