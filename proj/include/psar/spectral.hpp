#pragma once

#include <vector>

#include "psar/forward_operator.hpp"

namespace psar {

/// Matrix-free action of X = (1/M) sum_m d_m a_m a_m^H, applied as
/// (1/M) A^H (d .* (A v)). Holds a reference to A; A must outlive it.
class SpectralOperator {
public:
  SpectralOperator(const SamplingMatrix& A, RVec d);

  int size() const { return A_->cols(); }
  int measurement_count() const { return A_->rows(); }
  const SamplingMatrix& sampling() const { return *A_; }
  const RVec& measurements() const { return d_; }

  CVec apply(const CVec& v) const;

private:
  const SamplingMatrix* A_;
  RVec d_;
};

struct PowerMethodReport {
  CVec eigenvector;  // unit norm
  double rayleigh = 0.0;
  int iterations = 0;
  double residual = 0.0;  // ||X u - rayleigh u||
  bool converged = false;
  /// Dominant eigenvalue came out negative; possible when noise makes d indefinite.
  bool negative_dominant = false;
  std::vector<double> rayleigh_history;  // v_l^H X v_l before each update
};

struct PowerMethodOptions {
  double tol = 1e-9;
  int max_iters = 5000;
};

CVec spectral_apply(const SpectralOperator& op, const CVec& v);

/// Classical power iteration v <- Xv/||Xv||. Convergence is measured after
/// removing the global phase between consecutive iterates.
PowerMethodReport power_method(const SpectralOperator& op, const CVec& v0, double tol,
                               int max_iters);

/// ||d|| / sqrt(2M)
double lambda0(const RVec& d);
inline double lambda0(const IntensityMeasurements& d) { return lambda0(d.values); }

/// (1/sqrt(N)) * ones: the fixed starting vector shared with the unrolled network.
CVec fixed_initial_vector(int N);

struct SpectralEstimate {
  CVec rho0;
  PowerMethodReport report;
};

/// sqrt(lambda0) * u1 with u1 from power iteration started at fixed_initial_vector.
SpectralEstimate spectral_estimate_report(const SpectralOperator& op,
                                          const PowerMethodOptions& options = {});
CVec spectral_estimate(const SpectralOperator& op, const PowerMethodOptions& options = {});

/// -Re(rho^H X rho) + ||rho||^2
double j_s(const SpectralOperator& op, const CVec& rho);

/// rho^H delta(rho* rho*^H) rho with delta = (1/M) F^H F - I, i.e.
/// (1/M) sum_m |a_m^H rho*|^2 |a_m^H rho|^2 - |rho^H rho*|^2.
double delta_quadratic(const SamplingMatrix& A, const CVec& rho_star, const CVec& rho);

}  // namespace psar
