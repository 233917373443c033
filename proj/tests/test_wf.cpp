#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "psar/pnp.hpp"
#include "psar/wf.hpp"

using namespace psar;

TEST_CASE("WF objective") {
  const auto sar = oracle::small_sar();
  const CVec truth = oracle::random_cvec(64, 1);
  const RVec d = intensity_measurements(sar.A, truth).values;
  CHECK(wf_objective(sar.A, d, truth) <= 1e-20 * d.squaredNorm());
  CHECK(wf_objective(sar.A, d, CVec::Zero(64)) == doctest::Approx(d.squaredNorm() / (2.0 * 128)));

  const CVec rho = oracle::random_cvec(64, 2);
  double direct = 0.0;
  for (int m = 0; m < 128; ++m) {
    const double r = std::norm(sar.A.sampling_vector(m).dot(rho)) - d[m];
    direct += r * r;
  }
  direct /= 2.0 * 128;
  CHECK(std::abs(wf_objective(sar.A, d, rho) - direct) <= 1e-12 * direct);
}

TEST_CASE("WF gradient") {
  const auto sar = oracle::small_sar();
  const CVec truth = oracle::random_cvec(64, 3);
  const RVec d = intensity_measurements(sar.A, truth).values;

  SUBCASE("vanishes at the noiseless solution") {
    CHECK(wf_gradient(sar.A, d, truth).norm() <= 1e-10 * d.norm());
  }

  SUBCASE("real-parameter gradient is twice the Wirtinger gradient") {
    const CVec rho = oracle::random_cvec(64, 4);
    std::vector<double> x(128);
    for (int n = 0; n < 64; ++n) {
      x[n] = rho[n].real();
      x[64 + n] = rho[n].imag();
    }
    auto f = [&](const std::vector<double>& v) {
      CVec r(64);
      for (int n = 0; n < 64; ++n) r[n] = Complex(v[n], v[64 + n]);
      return wf_objective(sar.A, d, r);
    };
    const auto fd = oracle::central_difference(f, x, 1e-6);
    const CVec g = wf_gradient(sar.A, d, rho);
    std::vector<double> packed(128);
    for (int n = 0; n < 64; ++n) {
      packed[n] = 2 * g[n].real();
      packed[64 + n] = 2 * g[n].imag();
    }
    CHECK(oracle::relative_norm_error(packed, fd) < 1e-6);
  }

  SUBCASE("cubic homogeneity with zero data") {
    const CVec rho = oracle::random_cvec(64, 5);
    const RVec zero = RVec::Zero(128);
    for (double c : {0.5, 2.0, -1.5}) {
      const CVec lhs = wf_gradient(sar.A, zero, c * rho);
      const CVec rhs = c * c * c * wf_gradient(sar.A, zero, rho);
      CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }
  }
}

TEST_CASE("WF step schedule") {
  WfConfig c;
  CHECK(wf_step(c, 1) == doctest::Approx(1 - std::exp(-1.0 / 330)));
  CHECK(wf_step(c, 10000) == 0.4);
  c.constant_step = 1e-3;
  CHECK(wf_step(c, 50) == 1e-3);
}

TEST_CASE("WF with zero iterations returns the spectral initializer") {
  const auto sar = oracle::small_sar();
  const auto scene = random_rectangle_scene(sar.grid, 2, 2, 5);
  const RVec d = intensity_measurements(sar.A, scene.reflectivity).values;
  WfConfig c;
  c.iterations = 0;
  auto [rho, trace] = wf_run(sar.A, d, c);
  CHECK(rho == spectral_estimate(SpectralOperator(sar.A, d), c.init));
  CHECK(trace.objective.size() == 1);
  CHECK(trace.init_iterations > 0);
}

TEST_CASE("WF recovers in the Gaussian regime") {
  const int N = 64, M = 512;
  const auto A = oracle::gaussian_fixture(M, N, 77);
  const CVec truth = oracle::random_cvec(N, 78);
  const RVec d = intensity_measurements(A, truth).values;
  WfConfig c;
  c.iterations = 500;
  auto [rho, trace] = wf_run(A, d, c);
  const double rel = std::sqrt(phase_aligned_error(rho, truth)) / truth.norm();
  CHECK(rel < 1e-5);
  for (double v : trace.objective) CHECK(std::isfinite(v));
  CHECK(trace.objective.size() == 501);
}

TEST_CASE("WF descends on SAR geometry at a small constant step") {
  const auto sar = oracle::small_sar();
  const auto scene = random_rectangle_scene(sar.grid, 5, 2, 5);
  const RVec d = add_intensity_noise(intensity_measurements(sar.A, scene.reflectivity), 10, 5).values;
  WfConfig c;
  c.iterations = 50;
  c.constant_step = 1e-3;
  auto [rho, trace] = wf_run(sar.A, d, c);
  for (size_t t = 1; t < trace.objective.size(); ++t)
    CHECK(trace.objective[t] <= trace.objective[t - 1] * (1 + 1e-12));
}

TEST_CASE("WF errors") {
  const auto sar = oracle::small_sar();
  WfConfig c;
  CHECK_THROWS_AS(wf_run(sar.A, RVec::Zero(128), c), NumericalError);
  c.mu_max = 0;
  CHECK_THROWS_AS(wf_run_from(sar.A, RVec::Ones(128), oracle::random_cvec(64, 1), c),
                  InvalidArgument);
  WfConfig huge;
  huge.constant_step = 1e6;
  CHECK_THROWS_AS(
      wf_run_from(sar.A, RVec::Ones(128), oracle::random_cvec(64, 1), huge), NumericalError);
}
