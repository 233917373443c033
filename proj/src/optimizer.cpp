#include "psar/optimizer.hpp"

#include <cmath>

#include "psar/types.hpp"

namespace psar {

OptimizerState make_optimizer_state(size_t parameter_count, const AdamHyper& hyper) {
  OptimizerState s;
  s.hyper = hyper;
  s.first_moment.assign(parameter_count, 0.0);
  s.second_moment.assign(parameter_count, 0.0);
  return s;
}

void optimizer_step(std::span<double> params, std::span<const double> grads,
                    OptimizerState& state) {
  require(params.size() == grads.size() && params.size() == state.first_moment.size() &&
              params.size() == state.second_moment.size(),
          "optimizer_step: parameter, gradient and state sizes differ");
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = h.beta1 * m + (1.0 - h.beta1) * grads[i];
    v = h.beta2 * v + (1.0 - h.beta2) * grads[i] * grads[i];
    params[i] -= h.learning_rate * (m / c1) / (std::sqrt(v / c2) + h.epsilon);
  }
}

}  // namespace psar
