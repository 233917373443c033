#include "psar/forward_operator.hpp"

#include <cmath>
#include <random>

namespace psar {

namespace {

Point3 unit(const Point3& v) {
  double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

double distance(const Point3& a, const Point3& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

SamplingMatrix::SamplingMatrix(CMat entries, PhaseModel mode)
    : entries_(std::move(entries)), mode_(mode) {}

CVec SamplingMatrix::forward(const CVec& rho) const {
  require(rho.size() == entries_.cols(), "forward: image length does not match operator");
  return entries_ * rho;
}

CVec SamplingMatrix::adjoint(const CVec& y) const {
  require(y.size() == entries_.rows(), "adjoint: data length does not match operator");
  return entries_.adjoint() * y;
}

SamplingMatrix build_sampling_matrix(const SarGeometry& geometry, const SceneGrid& grid,
                                     PhaseModel mode) {
  const int S = geometry.slow_time_count();
  const int K = geometry.freq_count();
  const int N = grid.pixel_count();
  require(S >= 1 && K >= 1 && N >= 1, "build_sampling_matrix: empty geometry or grid");
  require(geometry.receive_positions.size() == geometry.transmit_positions.size(),
          "build_sampling_matrix: transmit/receive trajectories differ in length");

  CMat A(S * K, N);
  for (int s = 0; s < S; ++s) {
    const Point3& tx = geometry.transmit_positions[s];
    const Point3& rx = geometry.receive_positions[s];
    const Point3 ut = unit(tx), ur = unit(rx);
    const double lx = ut[0] + ur[0], ly = ut[1] + ur[1];
    for (int k = 0; k < K; ++k) {
      const double wavenumber = geometry.angular_frequencies[k] / geometry.wave_speed;
      const int m = s * K + k;
      for (int n = 0; n < N; ++n) {
        const Point2& x = grid.positions[n];
        double phase;
        if (mode == PhaseModel::far_field) {
          // a_m(n) = exp(-i k (g_T + g_R).x), row m stores its conjugate
          phase = wavenumber * (lx * x[0] + ly * x[1]);
        } else {
          const Point3 x3{x[0], x[1], 0.0};
          phase = -wavenumber * (distance(tx, x3) + distance(x3, rx));
        }
        A(m, n) = std::polar(1.0, phase);
      }
    }
  }
  return SamplingMatrix(std::move(A), mode);
}

CVec apply_forward(const SamplingMatrix& A, const CVec& rho) { return A.forward(rho); }

CVec apply_adjoint(const SamplingMatrix& A, const CVec& y) { return A.adjoint(y); }

IntensityMeasurements intensity_measurements(const SamplingMatrix& A, const CVec& rho) {
  return {A.forward(rho).cwiseAbs2(), std::nullopt};
}

RVec apply_lifted(const SamplingMatrix& A, const CMat& P) {
  require(P.rows() == A.cols() && P.cols() == A.cols(), "apply_lifted: P must be N x N");
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  require((P - P.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
          "apply_lifted: P is not Hermitian");
  const CMat& E = A.entries();
  RVec d(A.rows());
  for (int m = 0; m < A.rows(); ++m) {
    // a_m^H P a_m with a_m^H = row m
    d[m] = (E.row(m) * P * E.row(m).adjoint())(0, 0).real();
  }
  return d;
}

IntensityMeasurements add_intensity_noise(const IntensityMeasurements& d, double snr_db,
                                          std::uint64_t seed) {
  IntensityMeasurements out = d;
  out.snr_db = snr_db;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  const auto M = static_cast<double>(d.values.size());
  if (M == 0) return out;
  const double sigma2 = d.values.squaredNorm() / (M * std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
  for (Eigen::Index m = 0; m < out.values.size(); ++m) out.values[m] += gauss(rng);
  return out;
}

}  // namespace psar
