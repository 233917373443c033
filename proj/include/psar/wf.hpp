#pragma once

#include <vector>

#include <json.hpp>

#include "psar/spectral.hpp"

namespace psar {

struct WfConfig {
  int iterations = 150;
  double mu_max = 0.4;
  double t0 = 330.0;
  /// When set, overrides the ramp schedule with a constant step.
  std::optional<double> constant_step;
  PowerMethodOptions init;  // spectral initialization
};

struct WfTrace {
  std::vector<double> objective;  // entry 0 is the initial point
  CVec estimate;
  double wall_seconds = 0.0;
  int init_iterations = 0;  // power iterations spent on the initializer
};

/// (1/2M) sum_m (|a_m^H rho|^2 - d_m)^2
double wf_objective(const SamplingMatrix& A, const RVec& d, const CVec& rho);

/// Wirtinger gradient (1/M) A^H((|A rho|^2 - d) .* A rho). The gradient with
/// respect to the stacked (Re rho, Im rho) is twice this, packed as re + i im.
CVec wf_gradient(const SamplingMatrix& A, const RVec& d, const CVec& rho);

/// Step size mu_t = min(1 - exp(-t / t0), mu_max).
double wf_step(const WfConfig& config, int t);

/// Gradient descent rho <- rho - (mu_t / ||rho0||^2) grad from the spectral
/// estimate. Throws NumericalError on a zero initializer or non-finite objective.
std::pair<CVec, WfTrace> wf_run(const SamplingMatrix& A, const RVec& d, const WfConfig& config);

/// Same iteration from a caller-supplied starting point.
std::pair<CVec, WfTrace> wf_run_from(const SamplingMatrix& A, const RVec& d, const CVec& rho0,
                                     const WfConfig& config);

nlohmann::json trace_to_json(const WfTrace& trace);

void to_json(nlohmann::json& j, const WfConfig& c);

}  // namespace psar
