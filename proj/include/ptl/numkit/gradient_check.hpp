#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ptl/numkit/dense_array.hpp"

namespace ptl::numkit {

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Entries whose relative error exceeded the tolerance.
  std::size_t flagged = 0;
  /// Entries that failed at `step` and passed at a smaller step.
  std::size_t refined = 0;
  /// Location of the worst entry: (parameter array, flat element).
  std::size_t worst_array = 0;
  std::size_t worst_element = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  [[nodiscard]] bool passed() const { return flagged == 0; }
};

/// Relative error with a floor on the denominator, so entries whose true
/// gradient is ~0 are judged on absolute error below `floor`.
[[nodiscard]] double relative_error(double analytic, double numeric, double floor = 1e-6);

inline constexpr int kRefinements = 2;

/// Compares `analytic` against central finite differences of `loss`.
/// An entry that fails at `step` is retried at step/10 and step/100 before
/// it is flagged.
///
/// The denominator floor is `floor * max(1, |loss|)` because finite-difference
/// roundoff scales with the loss value. `loss` must read the current values of `params`; entries are perturbed in
/// place by +-step and restored bit-exactly afterwards. A non-finite loss at
/// any probe raises NumericError.
GradientCheckReport gradient_check(const std::function<double()>& loss, const std::vector<DenseArray*>& params,
                                   const std::vector<DenseArray>& analytic, double tolerance, double step = 1e-5,
                                   double floor = 1e-6);

/// Pointers to every array in `arrays`, for gradient_check.
[[nodiscard]] std::vector<DenseArray*> pointers_to(std::vector<DenseArray>& arrays);

}  // namespace ptl::numkit
