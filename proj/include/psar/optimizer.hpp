#pragma once

#include <span>
#include <vector>

namespace psar {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators mirror the flat parameter vector.
struct OptimizerState {
  AdamHyper hyper;
  long step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

OptimizerState make_optimizer_state(size_t parameter_count, const AdamHyper& hyper);

/// One bias-corrected Adam update in place.
void optimizer_step(std::span<double> params, std::span<const double> grads,
                    OptimizerState& state);

}  // namespace psar
