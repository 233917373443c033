#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "psar/forward_operator.hpp"

using namespace psar;

TEST_CASE("sampling matrix structure") {
  const auto sar = oracle::small_sar();
  const auto& A = sar.A;
  CHECK(A.rows() == 128);
  CHECK(A.cols() == 64);
  CHECK((A.entries().cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-12);
  for (int m = 0; m < A.rows(); ++m)
    CHECK(std::abs(A.sampling_vector(m).squaredNorm() - 64.0) <= 1e-12 * 64);

  // a pixel exactly at the origin sees zero phase
  const auto odd = oracle::small_sar(9, 4, 3);
  const int center = 4 * 9 + 4;
  REQUIRE(odd.grid.positions[center] == Point2{0, 0});
  for (int m = 0; m < odd.A.rows(); ++m) CHECK(odd.A.entries()(m, center) == Complex(1, 0));
}

TEST_CASE("reference-scale operator shape") {
  const auto geo = make_circular_geometry(10000, 7000, std::numbers::pi, 62, 9.9e9, 75e6, 31);
  const auto grid = make_scene_grid(62, 31);
  const auto A = build_sampling_matrix(geo, grid);
  CHECK(A.rows() == 1922);
  CHECK(A.cols() == 961);
  CHECK(static_cast<double>(A.rows()) / A.cols() == doctest::Approx(2.0));
}

TEST_CASE("forward map against direct summation") {
  const auto sar = oracle::small_sar();
  const CVec rho = oracle::random_cvec(64, 3);
  const CVec f = apply_forward(sar.A, rho);
  const CVec ref = oracle::direct_forward(sar.geometry, sar.grid, rho);
  CHECK((f - ref).norm() <= 1e-12 * ref.norm());

  CHECK(apply_forward(sar.A, CVec::Zero(64)).norm() == 0.0);
  CVec e = CVec::Zero(64);
  e[5] = 1.0;
  const CVec col = apply_forward(sar.A, e);
  for (int m = 0; m < sar.A.rows(); ++m)
    CHECK(col[m] == std::conj(sar.A.sampling_vector(m)[5]));

  CHECK_THROWS_AS(apply_forward(sar.A, CVec::Zero(63)), InvalidArgument);
}

TEST_CASE("adjoint identity on seeded inputs") {
  const auto sar = oracle::small_sar();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CVec rho = oracle::random_cvec(64, seed);
    const CVec y = oracle::random_cvec(128, 1000 + seed);
    const CVec Ar = apply_forward(sar.A, rho);
    const CVec Ay = apply_adjoint(sar.A, y);
    const Complex lhs = y.dot(Ar);   // <A rho, y> written as y^H A rho
    const Complex rhs = Ay.dot(rho); // <rho, A^H y> written as (A^H y)^H rho
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (Ar.norm() * y.norm() + rho.norm() * Ay.norm()));
  }
  CHECK(apply_adjoint(sar.A, CVec::Zero(128)).norm() == 0.0);
  CVec e = CVec::Zero(128);
  e[7] = 1.0;
  CHECK(apply_adjoint(sar.A, e) == sar.A.sampling_vector(7));
  CHECK_THROWS_AS(apply_adjoint(sar.A, CVec::Zero(5)), InvalidArgument);
}

TEST_CASE("intensities and the lifted map") {
  const auto sar = oracle::small_sar();
  CHECK(intensity_measurements(sar.A, CVec::Zero(64)).values.norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CVec rho = oracle::random_cvec(64, seed);
    const RVec d = intensity_measurements(sar.A, rho).values;
    CHECK(d.minCoeff() >= 0.0);

    const double theta = 0.37 * static_cast<double>(seed + 1);
    const RVec dp = intensity_measurements(sar.A, std::polar(1.0, theta) * rho).values;
    CHECK((d - dp).cwiseAbs().maxCoeff() <= 1e-12 * d.cwiseAbs().maxCoeff());

    const RVec lifted = apply_lifted(sar.A, rho * rho.adjoint());
    CHECK(((lifted - d).array().abs() <= 1e-10 * d.array().abs().max(1e-300)).all());
  }

  const RVec identity = apply_lifted(sar.A, CMat::Identity(64, 64));
  CHECK((identity.array() - 64.0).abs().maxCoeff() <= 1e-10);
  CHECK(apply_lifted(sar.A, CMat::Zero(64, 64)).norm() == 0.0);

  CMat bad = CMat::Zero(64, 64);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(apply_lifted(sar.A, bad), InvalidArgument);
}

TEST_CASE("exact-phase mode") {
  // For a scene much smaller than the standoff the exact phase differs from
  // the far-field one by a per-row constant plus a tiny quadratic term, so
  // the intensities agree closely.
  const auto geo = make_circular_geometry(10000, 7000, std::numbers::pi, 6, 9.9e9, 75e6, 4);
  const auto grid = make_scene_grid(0.05, 4);
  const auto far = build_sampling_matrix(geo, grid, PhaseModel::far_field);
  const auto exact = build_sampling_matrix(geo, grid, PhaseModel::exact_phase);
  CHECK(exact.mode() == PhaseModel::exact_phase);
  CHECK((exact.entries().cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-12);
  const CVec rho = oracle::random_cvec(16, 9);
  const RVec a = intensity_measurements(far, rho).values;
  const RVec b = intensity_measurements(exact, rho).values;
  CHECK((a - b).norm() <= 1e-3 * a.norm());
}

TEST_CASE("intensity noise") {
  const auto geo = make_circular_geometry(10000, 7000, std::numbers::pi, 62, 9.9e9, 75e6, 31);
  const auto grid = make_scene_grid(62, 31);
  const auto A = build_sampling_matrix(geo, grid);
  const auto scene = random_rectangle_scene(grid, 4, 4, 12);
  const auto clean = intensity_measurements(A, scene.reflectivity);

  SUBCASE("infinite SNR disables noise") {
    const auto d = add_intensity_noise(clean, INFINITY, 1);
    CHECK(d.values == clean.values);
    CHECK(d.snr_db.has_value());
  }

  SUBCASE("deterministic in seed") {
    CHECK(add_intensity_noise(clean, 10, 3).values == add_intensity_noise(clean, 10, 3).values);
    CHECK(add_intensity_noise(clean, 10, 3).values != add_intensity_noise(clean, 10, 4).values);
  }

  SUBCASE("empirical SNR matches the target") {
    for (double target : {5.0, 10.0}) {
      double acc = 0.0;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RVec eta = add_intensity_noise(clean, target, seed).values - clean.values;
        acc += 10.0 * std::log10(clean.values.squaredNorm() / eta.squaredNorm());
      }
      CHECK(std::abs(acc / 20.0 - target) <= 0.15);
    }
  }

  SUBCASE("negative values are kept") {
    const auto d = add_intensity_noise(clean, -5.0, 2);
    CHECK(d.values.minCoeff() < 0.0);
  }
}
