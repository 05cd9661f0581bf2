#include "nanovla/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "nanovla/errors.h"

namespace nanovla {
namespace {

double checked_loss(const DifferentiableFn& f, const ParameterStore& theta,
                    const std::string& name) {
  const double loss = f(theta).loss;
  if (!std::isfinite(loss)) {
    throw NumericError("grad_check: non-finite loss while perturbing " + name, name);
  }
  return loss;
}

}  // namespace

GradCheckReport grad_check(const DifferentiableFn& f, const ParameterStore& theta,
                           double step) {
  if (!(step >= 1e-6 && step <= 1e-3)) {
    throw ConfigError("grad_check: step must lie in [1e-6, 1e-3]");
  }
  const LossAndGrad base = f(theta);
  if (!std::isfinite(base.loss)) {
    throw NumericError("grad_check: non-finite loss at the base point");
  }
  GradCheckReport report;
  ParameterStore probe = theta;
  for (const auto& [name, tensor] : theta) {
    const Tensor analytic =
        base.grads.contains(name) ? base.grads.get(name) : Tensor(tensor.shape());
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double original = tensor[i];
      probe.mutable_get(name)[i] = original + step;
      const double up = checked_loss(f, probe, name);
      probe.mutable_get(name)[i] = original - step;
      const double down = checked_loss(f, probe, name);
      probe.mutable_get(name)[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
      ++report.entries_checked;
      if (err > report.max_relative_error || report.worst_parameter.empty()) {
        if (err >= report.max_relative_error) {
          report.max_relative_error = err;
          report.worst_parameter = name;
          report.worst_index = i;
        }
      }
    }
  }
  return report;
}

}  // namespace nanovla
