#include "veil/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "veil/errors.hpp"

namespace veil {

namespace {

double evaluate(const std::function<double()>& objective) {
  const double value = objective();
  if (!std::isfinite(value)) {
    throw NumericError("finite_difference_check: objective is not finite");
  }
  return value;
}

}  // namespace

GradCheckResult finite_difference_check(const std::function<double()>& objective,
                                        std::span<Parameter* const> params,
                                        double eps) {
  GradCheckResult result;
  for (Parameter* param : params) {
    if (param->grad.shape() != param->value.shape()) {
      throw DimensionError("finite_difference_check: parameter " +
                           param->name + " has no gradient");
    }
    for (std::size_t i = 0; i < param->value.size(); ++i) {
      const double original = param->value[i];
      param->value[i] = original + eps;
      const double up = evaluate(objective);
      param->value[i] = original - eps;
      const double down = evaluate(objective);
      param->value[i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = param->grad[i];
      const double denom =
          std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      const double error = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (error > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = error;
        result.worst_parameter = param->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

double compute_gradients(const std::function<Var(Tape&)>& loss,
                         std::span<Parameter* const> params,
                         std::uint64_t seed) {
  for (Parameter* param : params) {
    if (param->grad.shape() != param->value.shape()) {
      param->grad = Tensor(param->value.shape());
    }
    param->zero_grad();
  }
  Tape tape(seed);
  const Var out = loss(tape);
  tape.backward(out);
  return tape.value(out)[0];
}

}  // namespace veil
