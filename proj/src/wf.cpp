#include "psar/wf.hpp"

#include <chrono>
#include <cmath>

namespace psar {

double wf_objective(const SamplingMatrix& A, const RVec& d, const CVec& rho) {
  require(d.size() == A.rows(), "wf_objective: measurement length does not match operator");
  const RVec r = A.forward(rho).cwiseAbs2() - d;
  return r.squaredNorm() / (2.0 * static_cast<double>(A.rows()));
}

CVec wf_gradient(const SamplingMatrix& A, const RVec& d, const CVec& rho) {
  require(d.size() == A.rows(), "wf_gradient: measurement length does not match operator");
  CVec f = A.forward(rho);
  const RVec r = f.cwiseAbs2() - d;
  f.array() *= r.array().cast<Complex>();
  return A.adjoint(f) / static_cast<double>(A.rows());
}

double wf_step(const WfConfig& config, int t) {
  if (config.constant_step) return *config.constant_step;
  return std::min(1.0 - std::exp(-static_cast<double>(t) / config.t0), config.mu_max);
}

std::pair<CVec, WfTrace> wf_run_from(const SamplingMatrix& A, const RVec& d, const CVec& rho0,
                                     const WfConfig& config) {
  require(config.iterations >= 0, "wf_run: iteration count must be non-negative");
  require(config.mu_max > 0, "wf_run: mu_max must be positive");
  const auto start = std::chrono::steady_clock::now();
  const double scale = rho0.squaredNorm();
  if (!(scale > 0)) throw NumericalError("wf_run: initial estimate is zero, cannot scale step");

  WfTrace trace;
  CVec rho = rho0;
  auto record = [&] {
    const double obj = wf_objective(A, d, rho);
    trace.objective.push_back(obj);
    if (!std::isfinite(obj)) {
      trace.estimate = rho;
      throw NumericalError("wf_run: objective became non-finite at iteration " +
                           std::to_string(trace.objective.size() - 1));
    }
  };
  record();
  for (int t = 1; t <= config.iterations; ++t) {
    rho -= (wf_step(config, t) / scale) * wf_gradient(A, d, rho);
    record();
  }
  trace.estimate = rho;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(rho), std::move(trace)};
}

std::pair<CVec, WfTrace> wf_run(const SamplingMatrix& A, const RVec& d, const WfConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const SpectralOperator op(A, d);
  const SpectralEstimate init = spectral_estimate_report(op, config.init);
  auto result = wf_run_from(A, d, init.rho0, config);
  result.second.init_iterations = init.report.iterations;
  result.second.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

nlohmann::json trace_to_json(const WfTrace& trace) {
  return {{"objective", trace.objective},
          {"wall_seconds", trace.wall_seconds},
          {"init_iterations", trace.init_iterations}};
}

void to_json(nlohmann::json& j, const WfConfig& c) {
  j = {{"iterations", c.iterations}, {"mu_max", c.mu_max}, {"t0", c.t0}};
}

}  // namespace psar
