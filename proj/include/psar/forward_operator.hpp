#pragma once

#include <cstdint>
#include <optional>

#include "psar/sar_model.hpp"
#include "psar/types.hpp"

namespace psar {

enum class PhaseModel { far_field, exact_phase };

/// Dense M x N operator whose m-th row is a_m^H. Row m corresponds to
/// slow-time s and frequency k through m = s * K + k (0-based).
///
/// Callers above this layer only use forward()/adjoint(), so the dense
/// storage can be swapped for a matrix-free backend.
class SamplingMatrix {
public:
  SamplingMatrix() = default;
  SamplingMatrix(CMat entries, PhaseModel mode);

  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }
  PhaseModel mode() const { return mode_; }
  const CMat& entries() const { return entries_; }

  /// a_m as a column vector (conjugate of row m).
  CVec sampling_vector(int m) const { return entries_.row(m).adjoint(); }

  CVec forward(const CVec& rho) const;
  CVec adjoint(const CVec& y) const;

private:
  CMat entries_;
  PhaseModel mode_ = PhaseModel::far_field;
};

struct IntensityMeasurements {
  RVec values;
  std::optional<double> snr_db;
};

SamplingMatrix build_sampling_matrix(const SarGeometry& geometry, const SceneGrid& grid,
                                     PhaseModel mode = PhaseModel::far_field);

CVec apply_forward(const SamplingMatrix& A, const CVec& rho);
CVec apply_adjoint(const SamplingMatrix& A, const CVec& y);

/// d_m = |a_m^H rho|^2
IntensityMeasurements intensity_measurements(const SamplingMatrix& A, const CVec& rho);

/// d_m = Re(a_m^H P a_m) for Hermitian P. O(M N^2); meant for small N.
RVec apply_lifted(const SamplingMatrix& A, const CMat& P);

/// Adds i.i.d. N(0, sigma^2) with sigma^2 = ||d||^2 / (M 10^(snr/10)).
/// snr_db = +inf disables noise. Values are not clamped.
IntensityMeasurements add_intensity_noise(const IntensityMeasurements& d, double snr_db,
                                          std::uint64_t seed);

}  // namespace psar
