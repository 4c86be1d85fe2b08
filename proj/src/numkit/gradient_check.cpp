#include "ptl/numkit/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"

namespace ptl::numkit {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradientCheckReport gradient_check(const std::function<double()>& loss, const std::vector<DenseArray*>& params,
                                   const std::vector<DenseArray>& analytic, double tolerance, double step,
                                   double floor) {
  if (params.size() != analytic.size()) throw DimensionError("gradient_check: gradient list length mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) require_same_shape(*params[k], analytic[k], "gradient_check");

  auto probe = [&]() {
    const double value = loss();
    if (!std::isfinite(value)) throw NumericError("gradient_check: non-finite loss");
    return value;
  };
  // Central-difference roundoff grows like eps * |loss| / step, so the
  // near-zero-gradient floor scales with the loss magnitude.
  const double scaled_floor = floor * std::max(1.0, std::abs(probe()));

  GradientCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k]->values();
    for (std::size_t e = 0; e < values.size(); ++e) {
      const double original = values[e];
      auto central = [&](double h) {
        values[e] = original + h;
        const double up = probe();
        values[e] = original - h;
        const double down = probe();
        values[e] = original;
        return (up - down) / (2.0 * h);
      };
      double numeric = central(step);
      double err = relative_error(analytic[k][e], numeric, scaled_floor);
      // A ReLU kink inside [x - h, x + h] spoils the difference at this step
      // only; a wrong gradient fails at every step.
      for (int shrink = 0; err > tolerance && shrink < kRefinements; ++shrink) {
        numeric = central(step * std::pow(0.1, shrink + 1));
        err = relative_error(analytic[k][e], numeric, scaled_floor);
        if (err <= tolerance) ++report.refined;
      }
      ++report.checked;
      if (err > tolerance) ++report.flagged;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_array = k;
        report.worst_element = e;
        report.worst_analytic = analytic[k][e];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

std::vector<DenseArray*> pointers_to(std::vector<DenseArray>& arrays) {
  std::vector<DenseArray*> out;
  out.reserve(arrays.size());
  for (auto& a : arrays) out.push_back(&a);
  return out;
}

}  // namespace ptl::numkit
