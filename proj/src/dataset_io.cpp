#include "psar/dataset_io.hpp"

#include <limits>

namespace psar {

void to_json(nlohmann::json& j, const CircularGeometryParams& p) {
  j = {{"radius_m", p.radius_m},
       {"altitude_m", p.altitude_m},
       {"aperture_rad", p.aperture_rad},
       {"slow_time_samples", p.slow_time_samples},
       {"center_freq_hz", p.center_freq_hz},
       {"bandwidth_hz", p.bandwidth_hz},
       {"freq_samples", p.freq_samples}};
}

void from_json(const nlohmann::json& j, CircularGeometryParams& p) {
  j.at("radius_m").get_to(p.radius_m);
  j.at("altitude_m").get_to(p.altitude_m);
  j.at("aperture_rad").get_to(p.aperture_rad);
  j.at("slow_time_samples").get_to(p.slow_time_samples);
  j.at("center_freq_hz").get_to(p.center_freq_hz);
  j.at("bandwidth_hz").get_to(p.bandwidth_hz);
  j.at("freq_samples").get_to(p.freq_samples);
}

void to_json(nlohmann::json& j, const GridParams& p) {
  j = {{"extent_m", p.extent_m}, {"pixels_per_side", p.pixels_per_side}};
}

void from_json(const nlohmann::json& j, GridParams& p) {
  j.at("extent_m").get_to(p.extent_m);
  j.at("pixels_per_side").get_to(p.pixels_per_side);
}

void to_json(nlohmann::json& j, const RectangleLimits& p) {
  j = {{"min_side_px", p.min_side_px}, {"max_side_px", p.max_side_px}};
}

void from_json(const nlohmann::json& j, RectangleLimits& p) {
  j.at("min_side_px").get_to(p.min_side_px);
  j.at("max_side_px").get_to(p.max_side_px);
}

const Dataset* DatasetFile::find(const std::string& name) const {
  for (const auto& [n, ds] : splits)
    if (n == name) return &ds;
  return nullptr;
}

const Dataset& DatasetFile::split(const std::string& name) const {
  if (const Dataset* ds = find(name)) return *ds;
  throw FormatError("dataset has no split '" + name + "'");
}

Container to_container(const DatasetFile& file) {
  require(!file.splits.empty(), "dataset file needs at least one split");
  Container c;
  c.meta["kind"] = "dataset";
  c.meta["geometry"] = file.splits.front().second.geometry;
  c.meta["grid"] = file.splits.front().second.grid;
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& [name, ds] : file.splits) {
    nlohmann::json rects = nlohmann::json::array();
    for (size_t i = 0; i < ds.samples.size(); ++i) {
      const Sample& s = ds.samples[i];
      const std::string prefix = name + "/" + std::to_string(i);
      c.add_real(prefix + "/d", s.measurements);
      if (s.scene) {
        c.add_complex(prefix + "/rho", s.scene->reflectivity);
        const auto& r = s.scene->rect;
        rects.push_back({r.row0, r.col0, r.height, r.width, r.amplitude});
      } else {
        rects.push_back(nullptr);
      }
    }
    splits.push_back({{"name", name},
                      {"count", ds.samples.size()},
                      {"base_seed", ds.base_seed},
                      {"snr_db", ds.snr_db ? nlohmann::json(*ds.snr_db) : nlohmann::json()},
                      {"limits", ds.limits},
                      {"rectangles", std::move(rects)}});
  }
  c.meta["splits"] = std::move(splits);
  return c;
}

DatasetFile dataset_from_container(const Container& c) {
  DatasetFile file;
  try {
    if (c.meta.value("kind", "") != "dataset") throw FormatError("SARP1: not a dataset container");
    const auto geometry = c.meta.at("geometry").get<CircularGeometryParams>();
    const auto grid = c.meta.at("grid").get<GridParams>();
    const int M = geometry.slow_time_samples * geometry.freq_samples;
    const int N = grid.pixels_per_side * grid.pixels_per_side;
    for (const auto& sj : c.meta.at("splits")) {
      Dataset ds;
      ds.geometry = geometry;
      ds.grid = grid;
      ds.base_seed = sj.at("base_seed").get<std::uint64_t>();
      if (!sj.at("snr_db").is_null()) ds.snr_db = sj.at("snr_db").get<double>();
      ds.limits = sj.at("limits").get<RectangleLimits>();
      const auto name = sj.at("name").get<std::string>();
      const auto count = sj.at("count").get<size_t>();
      const auto& rects = sj.at("rectangles");
      if (rects.size() != count) throw FormatError("SARP1: rectangle list length mismatch");
      for (size_t i = 0; i < count; ++i) {
        const std::string prefix = name + "/" + std::to_string(i);
        Sample s;
        s.measurements = c.real(prefix + "/d");
        if (s.measurements.size() != M)
          throw FormatError("SARP1: sample '" + prefix + "' has wrong measurement length");
        if (c.contains(prefix + "/rho")) {
          Scene scene;
          scene.reflectivity = c.complex(prefix + "/rho");
          if (scene.reflectivity.size() != N)
            throw FormatError("SARP1: sample '" + prefix + "' has wrong image length");
          const auto& r = rects[i];
          scene.rect = {r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(),
                        r.at(3).get<int>(), r.at(4).get<double>()};
          s.scene = std::move(scene);
        }
        ds.samples.push_back(std::move(s));
      }
      file.splits.emplace_back(name, std::move(ds));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SARP1: malformed dataset header: ") + e.what());
  }
  return file;
}

void write_dataset(const std::filesystem::path& path, const DatasetFile& file) {
  write_container(path, to_container(file));
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  return dataset_from_container(read_container(path));
}

}  // namespace psar
