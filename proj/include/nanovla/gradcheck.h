#ifndef NANOVLA_GRADCHECK_H_
#define NANOVLA_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <string>

#include "nanovla/parameter_store.h"

namespace nanovla {

struct LossAndGrad {
  double loss = 0.0;
  ParameterStore grads;
};

using DifferentiableFn = std::function<LossAndGrad(const ParameterStore&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Compares f's analytic gradient against central differences
// (f(theta + step) - f(theta - step)) / (2 step) for every parameter entry.
// The error for one entry is |analytic - numeric| / max(1, |analytic|).
// step must lie in [1e-6, 1e-3].
GradCheckReport grad_check(const DifferentiableFn& f, const ParameterStore& theta,
                           double step);

}  // namespace nanovla

#endif  // NANOVLA_GRADCHECK_H_
