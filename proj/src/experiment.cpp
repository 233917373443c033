#include "psar/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace psar {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!j.is_object()) throw FormatError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw FormatError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void overlay(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void overlay_optional(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<double>();
  }
}

}  // namespace

// The default WF step cap suits Gaussian sampling. Coherent SAR rows make a
// few intensities much larger than ||rho||^2, and WF diverges unless the cap
// shrinks with the scene size.
ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "desk") {
    c.geometry.slow_time_samples = 32;
    c.geometry.freq_samples = 16;
    c.grid = {31.0, 16};
    c.dataset = {};
    c.snr_db = {10.0};
    c.network.arch = {6, 16, 3, true};
    c.network.training = {.epochs = 12, .batch_size = 10, .learning_rate = 1e-3, .seed = 1};
    c.wf.mu_max = 0.003;
    c.output_dir = "out/desk";
  } else if (name == "paper") {
    c.geometry = {};
    c.grid = {62.0, 31};
    c.dataset = {.train_count = 5000,
                 .test_count = 50,
                 .train_seed = 1000,
                 .test_seed = 900000,
                 .limits = {4, 12},
                 .train_snr_db = 10.0};
    c.snr_db = {5.0, 10.0};
    c.network.arch = {16, 32, 3, true};
    c.network.training = {.epochs = 50, .batch_size = 20, .learning_rate = 1e-3, .seed = 1};
    c.wf.mu_max = 0.001;
    c.output_dir = "out/paper";
  } else {
    throw InvalidArgument("unknown preset '" + std::string(name) + "' (expected paper or desk)");
  }
  c.wf.init = c.power;
  return c;
}

ExperimentConfig parse_config(const json& j, ExperimentConfig c) {
  try {
    reject_unknown(j, {"geometry", "grid", "dataset", "snr_db", "network", "wf", "power",
                       "output_dir"},
                   "config");
    if (j.contains("geometry")) {
      const json& g = j["geometry"];
      reject_unknown(g, {"radius_m", "altitude_m", "aperture_rad", "slow_time_samples",
                         "center_freq_hz", "bandwidth_hz", "freq_samples"},
                     "geometry");
      overlay(g, "radius_m", c.geometry.radius_m);
      overlay(g, "altitude_m", c.geometry.altitude_m);
      overlay(g, "aperture_rad", c.geometry.aperture_rad);
      overlay(g, "slow_time_samples", c.geometry.slow_time_samples);
      overlay(g, "center_freq_hz", c.geometry.center_freq_hz);
      overlay(g, "bandwidth_hz", c.geometry.bandwidth_hz);
      overlay(g, "freq_samples", c.geometry.freq_samples);
    }
    if (j.contains("grid")) {
      const json& g = j["grid"];
      reject_unknown(g, {"extent_m", "pixels_per_side"}, "grid");
      overlay(g, "extent_m", c.grid.extent_m);
      overlay(g, "pixels_per_side", c.grid.pixels_per_side);
    }
    if (j.contains("dataset")) {
      const json& d = j["dataset"];
      reject_unknown(d, {"train_count", "test_count", "train_seed", "test_seed", "min_side_px",
                         "max_side_px", "train_snr_db"},
                     "dataset");
      overlay(d, "train_count", c.dataset.train_count);
      overlay(d, "test_count", c.dataset.test_count);
      overlay(d, "train_seed", c.dataset.train_seed);
      overlay(d, "test_seed", c.dataset.test_seed);
      overlay(d, "min_side_px", c.dataset.limits.min_side_px);
      overlay(d, "max_side_px", c.dataset.limits.max_side_px);
      overlay_optional(d, "train_snr_db", c.dataset.train_snr_db);
    }
    overlay(j, "snr_db", c.snr_db);
    if (j.contains("network")) {
      const json& n = j["network"];
      reject_unknown(n, {"stages", "tying_map", "depth", "width", "kernel", "residual",
                         "init_seed", "epochs", "batch_size", "learning_rate", "seed",
                         "deterministic", "threads"},
                     "network");
      overlay(n, "stages", c.network.stages);
      overlay(n, "tying_map", c.network.tying_map);
      overlay(n, "depth", c.network.arch.depth);
      overlay(n, "width", c.network.arch.width);
      overlay(n, "kernel", c.network.arch.kernel);
      overlay(n, "residual", c.network.arch.residual);
      overlay(n, "init_seed", c.network.init_seed);
      overlay(n, "epochs", c.network.training.epochs);
      overlay(n, "batch_size", c.network.training.batch_size);
      overlay(n, "learning_rate", c.network.training.learning_rate);
      overlay(n, "seed", c.network.training.seed);
      overlay(n, "deterministic", c.network.training.deterministic);
      overlay(n, "threads", c.network.training.threads);
    }
    if (j.contains("wf")) {
      const json& w = j["wf"];
      reject_unknown(w, {"iterations", "mu_max", "t0"}, "wf");
      overlay(w, "iterations", c.wf.iterations);
      overlay(w, "mu_max", c.wf.mu_max);
      overlay(w, "t0", c.wf.t0);
    }
    if (j.contains("power")) {
      const json& p = j["power"];
      reject_unknown(p, {"tol", "max_iters"}, "power");
      overlay(p, "tol", c.power.tol);
      overlay(p, "max_iters", c.power.max_iters);
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.wf.init = c.power;

  require(c.dataset.train_count >= 1 && c.dataset.test_count >= 1,
          "config: dataset counts must be positive");
  require(c.wf.iterations >= 0 && c.wf.mu_max > 0, "config: invalid WF settings");
  require(c.power.tol > 0 && c.power.max_iters >= 1, "config: invalid power-method settings");
  c.network.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j, std::move(base));
}

json config_to_json(const ExperimentConfig& c) {
  const auto& t = c.network.training;
  return {{"geometry", c.geometry},
          {"grid", c.grid},
          {"dataset",
           {{"train_count", c.dataset.train_count},
            {"test_count", c.dataset.test_count},
            {"train_seed", c.dataset.train_seed},
            {"test_seed", c.dataset.test_seed},
            {"min_side_px", c.dataset.limits.min_side_px},
            {"max_side_px", c.dataset.limits.max_side_px},
            {"train_snr_db",
             c.dataset.train_snr_db ? json(*c.dataset.train_snr_db) : json()}}},
          {"snr_db", c.snr_db},
          {"network",
           {{"stages", c.network.stages},
            {"tying_map", c.network.tying_map},
            {"depth", c.network.arch.depth},
            {"width", c.network.arch.width},
            {"kernel", c.network.arch.kernel},
            {"residual", c.network.arch.residual},
            {"init_seed", c.network.init_seed},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"seed", t.seed},
            {"deterministic", t.deterministic},
            {"threads", t.threads}}},
          {"wf", c.wf},
          {"power", {{"tol", c.power.tol}, {"max_iters", c.power.max_iters}}},
          {"output_dir", c.output_dir.string()}};
}

std::string test_split_name(double snr_db) {
  std::ostringstream os;
  os << "test_" << snr_db << "dB";
  return os.str();
}

DatasetFile simulate(const ExperimentConfig& config, unsigned threads) {
  DatasetFile file;
  file.splits.emplace_back(
      "train", generate_dataset(config.geometry, config.grid, config.dataset.train_count,
                                config.dataset.train_seed, config.dataset.train_snr_db,
                                config.dataset.limits, threads));
  for (double snr : config.snr_db)
    file.splits.emplace_back(test_split_name(snr),
                             generate_dataset(config.geometry, config.grid,
                                              config.dataset.test_count, config.dataset.test_seed,
                                              snr, config.dataset.limits, threads));
  return file;
}

Method parse_method(std::string_view s) {
  if (s == "pnp") return Method::pnp;
  if (s == "spectral") return Method::spectral;
  if (s == "wf") return Method::wf;
  throw InvalidArgument("unknown method '" + std::string(s) + "' (expected pnp, spectral or wf)");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::pnp: return "pnp";
    case Method::spectral: return "spectral";
    case Method::wf: return "wf";
  }
  return "?";
}

double normalized_mse(const CVec& estimate, const CVec& truth) {
  auto unit = [](const CVec& v) {
    const double n = v.norm();
    return n > 0 ? CVec(v / n) : v;
  };
  return phase_aligned_error(unit(estimate), unit(truth)) / static_cast<double>(truth.size());
}

json metrics_to_json(const MetricsReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"index", s.index},
                       {"mse", s.mse},
                       {"wall_seconds", s.wall_seconds},
                       {"iterations", s.iterations},
                       {"delta", s.delta ? json(*s.delta) : json()}});
  }
  return {{"method", r.method},
          {"split", r.split},
          {"snr_db", r.snr_db ? json(*r.snr_db) : json()},
          {"sample_count", r.samples.size()},
          {"mean_mse", r.mean_mse},
          {"median_mse", r.median_mse},
          {"mean_wall_seconds", r.mean_wall_seconds},
          {"delta", {{"mean", r.delta_mean}, {"min", r.delta_min}, {"max", r.delta_max}}},
          {"samples", std::move(samples)}};
}

MetricsReport evaluate(Method method, const Dataset& split, const std::string& split_name,
                       const ExperimentConfig& config, const TrainedModel* model,
                       const std::optional<std::filesystem::path>& export_dir) {
  require(split.has_ground_truth(), "evaluate: split '" + split_name + "' lacks ground truth");
  if (method == Method::pnp) require(model != nullptr, "evaluate: pnp needs a model");
  const SceneGrid grid = make_scene_grid(split.grid);
  const SamplingMatrix A = build_sampling_matrix(make_circular_geometry(split.geometry), grid);
  if (export_dir) std::filesystem::create_directories(*export_dir);

  MetricsReport rep;
  rep.method = std::string(method_name(method));
  rep.split = split_name;
  rep.snr_db = split.snr_db;
  std::vector<double> deltas;

  for (size_t i = 0; i < split.samples.size(); ++i) {
    const Sample& s = split.samples[i];
    const CVec& truth = s.scene->reflectivity;
    SampleMetrics m;
    m.index = static_cast<int>(i);
    const auto t0 = std::chrono::steady_clock::now();
    CVec estimate;
    switch (method) {
      case Method::pnp: {
        auto r = reconstruct({s.measurements, split.snr_db}, A, *model);
        estimate = std::move(r.scaled);
        m.iterations = r.report.stages;
        break;
      }
      case Method::spectral: {
        const SpectralOperator op(A, s.measurements);
        auto r = spectral_estimate_report(op, config.power);
        estimate = std::move(r.rho0);
        m.iterations = r.report.iterations;
        break;
      }
      case Method::wf: {
        WfConfig wf = config.wf;
        wf.init = config.power;
        auto [rho, trace] = wf_run(A, s.measurements, wf);
        estimate = std::move(rho);
        m.iterations = trace.init_iterations;
        break;
      }
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.mse = normalized_mse(estimate, truth);
    const double tn = truth.norm();
    if (tn > 0) {
      const CVec unit = truth / tn;
      m.delta = delta_quadratic(A, unit, unit);
      deltas.push_back(*m.delta);
    }
    if (!std::isfinite(m.mse)) throw NumericalError("evaluate: non-finite MSE");
    if (export_dir) {
      const std::string stem = "sample_" + std::to_string(i);
      write_pgm(*export_dir / (stem + "_truth.pgm"), truth, grid.pixels_per_side);
      write_pgm(*export_dir / (stem + "_" + rep.method + ".pgm"), estimate, grid.pixels_per_side);
    }
    rep.samples.push_back(m);
  }

  std::vector<double> mses;
  double wall = 0.0;
  for (const auto& m : rep.samples) {
    mses.push_back(m.mse);
    wall += m.wall_seconds;
  }
  const double n = static_cast<double>(mses.size());
  rep.mean_mse = std::accumulate(mses.begin(), mses.end(), 0.0) / n;
  rep.mean_wall_seconds = wall / n;
  std::sort(mses.begin(), mses.end());
  const size_t h = mses.size() / 2;
  rep.median_mse = mses.size() % 2 ? mses[h] : 0.5 * (mses[h - 1] + mses[h]);
  if (!deltas.empty()) {
    rep.delta_mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / deltas.size();
    rep.delta_min = *std::min_element(deltas.begin(), deltas.end());
    rep.delta_max = *std::max_element(deltas.begin(), deltas.end());
  }
  return rep;
}

std::vector<std::uint8_t> encode_pgm(const CVec& image, int n_side) {
  require(image.size() == static_cast<Eigen::Index>(n_side) * n_side,
          "encode_pgm: image length is not n_side^2");
  const std::string header =
      "P5\n" + std::to_string(n_side) + " " + std::to_string(n_side) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const RVec mag = image.cwiseAbs();
  const double peak = mag.size() ? mag.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < mag.size(); ++i) {
    const double v = peak > 0 ? mag[i] / peak : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const CVec& image, int n_side) {
  const auto bytes = encode_pgm(image, n_side);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

double expansion_residual(const SamplingMatrix& A, const CVec& rho_star, const CVec& rho) {
  const RVec d = A.forward(rho_star).cwiseAbs2();
  const SpectralOperator op(A, d);
  const double js = j_s(op, rho);
  const double overlap = std::norm(rho.dot(rho_star));
  const double dq = delta_quadratic(A, rho_star, rho);
  const double expanded = -overlap + rho.squaredNorm() - dq;
  const double scale = std::abs(js) + overlap + rho.squaredNorm() + std::abs(dq);
  return scale > 0 ? std::abs(js - expanded) / scale : 0.0;
}

std::vector<DiagnosticEntry> diagnose(const DatasetFile& file) {
  std::vector<DiagnosticEntry> out;
  for (const auto& [name, split] : file.splits) {
    if (!split.has_ground_truth()) continue;
    const SamplingMatrix A =
        build_sampling_matrix(make_circular_geometry(split.geometry), make_scene_grid(split.grid));
    for (size_t i = 0; i < split.samples.size(); ++i) {
      const CVec& truth = split.samples[i].scene->reflectivity;
      const double tn = truth.norm();
      const CVec star = tn > 0 ? CVec(truth / tn) : truth;

      std::mt19937_64 rng(i);
      std::normal_distribution<double> g;
      CVec probe(star.size());
      for (auto& v : probe) v = Complex(g(rng), g(rng));
      probe /= probe.norm();

      DiagnosticEntry e;
      e.split = name;
      e.index = static_cast<int>(i);
      e.delta = delta_quadratic(A, star, star);
      e.identity_residual =
          std::max(expansion_residual(A, star, star), expansion_residual(A, star, probe));
      out.push_back(e);
    }
  }
  return out;
}

nlohmann::json diagnostics_to_json(const std::vector<DiagnosticEntry>& entries) {
  json samples = json::array();
  double max_res = 0.0, dmin = 0.0, dmax = 0.0, dsum = 0.0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    samples.push_back({{"split", e.split},
                       {"index", e.index},
                       {"delta", e.delta},
                       {"identity_residual", e.identity_residual}});
    max_res = std::max(max_res, e.identity_residual);
    dmin = i == 0 ? e.delta : std::min(dmin, e.delta);
    dmax = i == 0 ? e.delta : std::max(dmax, e.delta);
    dsum += e.delta;
  }
  const double n = entries.empty() ? 1.0 : static_cast<double>(entries.size());
  return {{"samples", std::move(samples)},
          {"summary",
           {{"count", entries.size()},
            {"max_identity_residual", max_res},
            {"delta_min", dmin},
            {"delta_max", dmax},
            {"delta_mean", dsum / n}}}};
}

}  // namespace psar
