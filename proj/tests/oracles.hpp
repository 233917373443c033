#pragma once

// Independent reference computations used only by tests. Nothing here goes
// through the factored operator paths they check.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>

#include "psar/autodiff.hpp"
#include "psar/forward_operator.hpp"
#include "psar/sar_model.hpp"

namespace oracle {

using psar::CMat;
using psar::Complex;
using psar::CVec;
using psar::RVec;

inline CVec random_cvec(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CVec v(n);
  for (auto& x : v) x = Complex(g(rng), g(rng));
  return v;
}

inline RVec random_rvec(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RVec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

/// f_m = sum_n conj(a_m(n)) rho_n, with a_m(n) evaluated straight from the
/// far-field phase formula.
inline CVec direct_forward(const psar::SarGeometry& geo, const psar::SceneGrid& grid,
                           const CVec& rho) {
  const int S = geo.slow_time_count(), K = geo.freq_count();
  CVec f = CVec::Zero(S * K);
  for (int s = 0; s < S; ++s) {
    const auto& p = geo.transmit_positions[s];
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    for (int k = 0; k < K; ++k) {
      const double kw = geo.angular_frequencies[k] / geo.wave_speed;
      for (int n = 0; n < grid.pixel_count(); ++n) {
        const auto& x = grid.positions[n];
        const double dot = 2.0 * (p[0] * x[0] + p[1] * x[1]) / r;
        const Complex a = std::exp(Complex(0.0, -kw * dot));
        f[s * K + k] += std::conj(a) * rho[n];
      }
    }
  }
  return f;
}

/// (1/M) sum_m d_m a_m a_m^H assembled densely.
inline CMat dense_spectral_matrix(const psar::SamplingMatrix& A, const RVec& d) {
  const int N = A.cols();
  CMat X = CMat::Zero(N, N);
  for (int m = 0; m < A.rows(); ++m) {
    const CVec a = A.sampling_vector(m);
    X += d[m] * (a * a.adjoint());
  }
  return X / static_cast<double>(A.rows());
}

/// Top eigenvector (largest eigenvalue) of a Hermitian matrix.
inline CVec dense_top_eigenvector(const CMat& X) {
  Eigen::SelfAdjointEigenSolver<CMat> es(X);
  return es.eigenvectors().col(X.rows() - 1);
}

/// Six nested loops, zero padding, cross-correlation.
inline psar::ad::Tensor naive_conv(const psar::ad::Tensor& x, const psar::ad::Tensor& w,
                                   const psar::ad::Tensor& b) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const int pad = ws[2] / 2;
  psar::ad::Tensor out({xs[0], ws[0], xs[2], xs[3]});
  for (int n = 0; n < xs[0]; ++n)
    for (int co = 0; co < ws[0]; ++co)
      for (int y = 0; y < xs[2]; ++y)
        for (int xx = 0; xx < xs[3]; ++xx) {
          double s = b[co];
          for (int ci = 0; ci < ws[1]; ++ci)
            for (int ky = 0; ky < ws[2]; ++ky)
              for (int kx = 0; kx < ws[3]; ++kx) {
                const int iy = y + ky - pad, ix = xx + kx - pad;
                if (iy < 0 || ix < 0 || iy >= xs[2] || ix >= xs[3]) continue;
                s += w.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
          out.at(n, co, y, xx) = s;
        }
  return out;
}

/// Central differences of a scalar function of a flat real vector.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor); floor guards components
/// that are zero up to round-off.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// ||a - b|| / ||b||
inline double relative_norm_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// I.i.d. standard complex Gaussian rows, E|A_mn|^2 = 1. Test fixture for WF
/// and spectral initialization in their guaranteed regime; not a SAR model.
inline psar::SamplingMatrix gaussian_fixture(int M, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CMat A(M, N);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) A(m, n) = Complex(g(rng), g(rng));
  return psar::SamplingMatrix(std::move(A), psar::PhaseModel::far_field);
}

/// Small SAR instance: 8x8 grid (N = 64) and an S x K circular geometry.
struct SmallSar {
  psar::SarGeometry geometry;
  psar::SceneGrid grid;
  psar::SamplingMatrix A;
};

inline SmallSar small_sar(int n_side = 8, int S = 16, int K = 8, double extent = 15.5) {
  SmallSar s;
  s.geometry = psar::make_circular_geometry(10000, 7000, 3.14159265358979323846, S, 9.9e9, 75e6, K);
  s.grid = psar::make_scene_grid(extent, n_side);
  s.A = psar::build_sampling_matrix(s.geometry, s.grid);
  return s;
}

}  // namespace oracle
