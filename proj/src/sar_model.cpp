#include "psar/sar_model.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "psar/forward_operator.hpp"

namespace psar {

SarGeometry make_circular_geometry(double radius_m, double altitude_m, double aperture_rad, int S,
                                   double center_freq_hz, double bandwidth_hz, int K) {
  require(radius_m > 0, "make_circular_geometry: radius must be positive");
  require(altitude_m > 0, "make_circular_geometry: altitude must be positive");
  require(S >= 1 && K >= 1, "make_circular_geometry: S and K must be at least 1");
  require(bandwidth_hz >= 0, "make_circular_geometry: bandwidth must be non-negative");

  SarGeometry g;
  g.transmit_positions.reserve(S);
  for (int s = 0; s < S; ++s) {
    const double theta = S > 1 ? s * aperture_rad / (S - 1) : 0.0;
    g.transmit_positions.push_back(
        {radius_m * std::cos(theta), radius_m * std::sin(theta), altitude_m});
  }
  g.receive_positions = g.transmit_positions;

  g.angular_frequencies.reserve(K);
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  for (int k = 0; k < K; ++k) {
    const double f = K > 1 ? center_freq_hz - bandwidth_hz / 2 + k * bandwidth_hz / (K - 1)
                           : center_freq_hz;
    g.angular_frequencies.push_back(two_pi * f);
  }
  return g;
}

SarGeometry make_circular_geometry(const CircularGeometryParams& p) {
  return make_circular_geometry(p.radius_m, p.altitude_m, p.aperture_rad, p.slow_time_samples,
                                p.center_freq_hz, p.bandwidth_hz, p.freq_samples);
}

SceneGrid make_scene_grid(double extent_m, int pixels_per_side) {
  require(extent_m > 0, "make_scene_grid: extent must be positive");
  require(pixels_per_side >= 2, "make_scene_grid: need at least 2 pixels per side");
  SceneGrid grid;
  grid.extent = extent_m;
  grid.pixels_per_side = pixels_per_side;
  const double step = extent_m / (pixels_per_side - 1);
  const double half = extent_m / 2;
  grid.positions.reserve(static_cast<size_t>(pixels_per_side) * pixels_per_side);
  for (int r = 0; r < pixels_per_side; ++r) {
    for (int c = 0; c < pixels_per_side; ++c) {
      grid.positions.push_back({-half + c * step, -half + r * step});
    }
  }
  return grid;
}

Scene random_rectangle_scene(const SceneGrid& grid, std::uint64_t seed, int min_side_px,
                             int max_side_px) {
  const int n = grid.pixels_per_side;
  require(1 <= min_side_px && min_side_px <= max_side_px && max_side_px <= n,
          "random_rectangle_scene: need 1 <= min_side <= max_side <= pixels_per_side");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> side(min_side_px, max_side_px);
  Scene scene;
  scene.rect.height = side(rng);
  scene.rect.width = side(rng);
  scene.rect.row0 = std::uniform_int_distribution<int>(0, n - scene.rect.height)(rng);
  scene.rect.col0 = std::uniform_int_distribution<int>(0, n - scene.rect.width)(rng);
  scene.rect.amplitude = 1.0;

  scene.reflectivity = CVec::Zero(static_cast<Eigen::Index>(n) * n);
  for (int r = scene.rect.row0; r < scene.rect.row0 + scene.rect.height; ++r)
    for (int c = scene.rect.col0; c < scene.rect.col0 + scene.rect.width; ++c)
      scene.reflectivity[r * n + c] = Complex(scene.rect.amplitude, 0.0);
  return scene;
}

std::uint64_t noise_seed_for(std::uint64_t base_seed, std::uint64_t index) {
  // splitmix64 finalizer over a stream offset
  std::uint64_t z = base_seed + index + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool Dataset::has_ground_truth() const {
  for (const auto& s : samples)
    if (!s.scene) return false;
  return !samples.empty();
}

Dataset generate_dataset(const CircularGeometryParams& geometry, const GridParams& grid_params,
                         int count, std::uint64_t base_seed, std::optional<double> snr_db,
                         const RectangleLimits& limits, unsigned threads) {
  require(count >= 1, "generate_dataset: count must be at least 1");
  const SarGeometry geo = make_circular_geometry(geometry);
  const SceneGrid grid = make_scene_grid(grid_params);
  const SamplingMatrix A = build_sampling_matrix(geo, grid);

  Dataset ds;
  ds.geometry = geometry;
  ds.grid = grid_params;
  ds.limits = limits;
  ds.base_seed = base_seed;
  ds.snr_db = snr_db;
  ds.samples.resize(count);

  auto make_sample = [&](int i) {
    Sample sample;
    sample.scene = random_rectangle_scene(grid, base_seed + i, limits.min_side_px,
                                          limits.max_side_px);
    auto d = intensity_measurements(A, sample.scene->reflectivity);
    if (snr_db) d = add_intensity_noise(d, *snr_db, noise_seed_for(base_seed, i));
    sample.measurements = std::move(d.values);
    ds.samples[i] = std::move(sample);
  };

  threads = std::max(1u, std::min<unsigned>(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) make_sample(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int i = static_cast<int>(t); i < count; i += static_cast<int>(threads)) make_sample(i);
      });
  }
  return ds;
}

}  // namespace psar
