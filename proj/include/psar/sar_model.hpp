#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "psar/types.hpp"

namespace psar {

inline constexpr double kSpeedOfLight = 2.99792458e8;

/// Parameters of a monostatic circular spotlight trajectory. Kept alongside
/// the expanded geometry so datasets can record and rebuild it.
struct CircularGeometryParams {
  double radius_m = 10000.0;
  double altitude_m = 7000.0;
  double aperture_rad = 3.14159265358979323846;
  int slow_time_samples = 62;
  double center_freq_hz = 9.9e9;
  double bandwidth_hz = 75e6;
  int freq_samples = 31;
};

struct SarGeometry {
  std::vector<Point3> transmit_positions;
  std::vector<Point3> receive_positions;
  std::vector<double> angular_frequencies;
  double wave_speed = kSpeedOfLight;

  int slow_time_count() const { return static_cast<int>(transmit_positions.size()); }
  int freq_count() const { return static_cast<int>(angular_frequencies.size()); }
  int measurement_count() const { return slow_time_count() * freq_count(); }
};

struct GridParams {
  double extent_m = 62.0;
  int pixels_per_side = 31;
};

struct SceneGrid {
  double extent = 0.0;
  int pixels_per_side = 0;
  std::vector<Point2> positions;  // row-major, origin-centered

  int pixel_count() const { return static_cast<int>(positions.size()); }
  double spacing() const { return extent / (pixels_per_side - 1); }
};

struct RectangleInfo {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
  double amplitude = 1.0;
};

struct Scene {
  CVec reflectivity;
  RectangleInfo rect;
};

struct RectangleLimits {
  int min_side_px = 4;
  int max_side_px = 12;
};

SarGeometry make_circular_geometry(double radius_m, double altitude_m, double aperture_rad, int S,
                                   double center_freq_hz, double bandwidth_hz, int K);
SarGeometry make_circular_geometry(const CircularGeometryParams& p);

SceneGrid make_scene_grid(double extent_m, int pixels_per_side);
inline SceneGrid make_scene_grid(const GridParams& p) {
  return make_scene_grid(p.extent_m, p.pixels_per_side);
}

Scene random_rectangle_scene(const SceneGrid& grid, std::uint64_t seed, int min_side_px,
                             int max_side_px);

/// Seed of the noise stream for sample `index`; independent of the scene
/// stream so the noise level can change with scenes held fixed.
std::uint64_t noise_seed_for(std::uint64_t base_seed, std::uint64_t index);

struct Sample {
  std::optional<Scene> scene;  // absent for measurement-only samples
  RVec measurements;
};

struct Dataset {
  CircularGeometryParams geometry;
  GridParams grid;
  RectangleLimits limits;
  std::uint64_t base_seed = 0;
  std::optional<double> snr_db;
  std::vector<Sample> samples;

  bool has_ground_truth() const;
};

/// Scenes come from seeds base_seed + i, noise (when snr_db is set) from
/// noise_seed_for(base_seed, i). Samples are generated on `threads` workers;
/// output order and content do not depend on the thread count.
Dataset generate_dataset(const CircularGeometryParams& geometry, const GridParams& grid, int count,
                         std::uint64_t base_seed, std::optional<double> snr_db,
                         const RectangleLimits& limits, unsigned threads = 1);

}  // namespace psar
