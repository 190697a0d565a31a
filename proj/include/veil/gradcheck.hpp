#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "veil/autodiff.hpp"

namespace veil {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Compares the gradients already stored in each Parameter::grad against
// central differences of `objective`, which must evaluate deterministically
// from the current parameter values. The error for one element is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckResult finite_difference_check(const std::function<double()>& objective,
                                        std::span<Parameter* const> params,
                                        double eps = 1e-5);

// Zeroes the parameter gradients, records `loss` on a fresh tape and runs
// backward. Returns the loss value.
double compute_gradients(const std::function<Var(Tape&)>& loss,
                         std::span<Parameter* const> params,
                         std::uint64_t seed = 0);

}  // namespace veil
