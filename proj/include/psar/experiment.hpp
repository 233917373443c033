#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "psar/dataset_io.hpp"
#include "psar/pnp.hpp"
#include "psar/wf.hpp"

namespace psar {

struct DatasetConfig {
  int train_count = 500;
  int test_count = 50;
  std::uint64_t train_seed = 1000;
  std::uint64_t test_seed = 900000;
  RectangleLimits limits{2, 6};
  std::optional<double> train_snr_db = 10.0;
};

struct ExperimentConfig {
  CircularGeometryParams geometry;
  GridParams grid;
  DatasetConfig dataset;
  std::vector<double> snr_db{10.0};  // one test split per entry
  UnrolledConfig network;
  WfConfig wf;
  PowerMethodOptions power;  // spectral method and WF initializer
  std::filesystem::path output_dir = "out";
};

/// "desk" (16x16 grid, 500/50 samples) or "paper" (31x31 grid, 5000/50, 16-layer denoisers).
ExperimentConfig preset(std::string_view name);

/// Overlays `j` onto `base`. Unknown keys raise FormatError.
ExperimentConfig parse_config(const nlohmann::json& j, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
nlohmann::json config_to_json(const ExperimentConfig& c);

std::string test_split_name(double snr_db);

/// Splits: "train" plus one "test_<snr>dB" per configured SNR. Test scenes
/// share test_seed across SNRs; only the noise stream differs.
DatasetFile simulate(const ExperimentConfig& config, unsigned threads = 1);

enum class Method { pnp, spectral, wf };
Method parse_method(std::string_view s);
std::string_view method_name(Method m);

struct SampleMetrics {
  int index = 0;
  double mse = 0.0;  // phase-aligned error of unit-norm images / N
  double wall_seconds = 0.0;
  int iterations = 0;  // power iterations (spectral, WF init) or stages (pnp)
  std::optional<double> delta;
};

struct MetricsReport {
  std::string method;
  std::string split;
  std::optional<double> snr_db;
  std::vector<SampleMetrics> samples;
  double mean_mse = 0.0;
  double median_mse = 0.0;
  double mean_wall_seconds = 0.0;
  double delta_mean = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
};

nlohmann::json metrics_to_json(const MetricsReport& r);

/// (||a||^2 + ||b||^2 - 2|<b, a>|) / N on unit-normalized copies (zero stays zero).
double normalized_mse(const CVec& estimate, const CVec& truth);

/// Reconstructs every sample of `split` and scores it against ground truth.
/// When `export_dir` is set, writes sample_<i>_truth.pgm and
/// sample_<i>_<method>.pgm there.
MetricsReport evaluate(Method method, const Dataset& split, const std::string& split_name,
                       const ExperimentConfig& config, const TrainedModel* model,
                       const std::optional<std::filesystem::path>& export_dir = std::nullopt);

/// Binary PGM (P5) of |image|, max-normalized to 255. All-zero images map to 0.
std::vector<std::uint8_t> encode_pgm(const CVec& image, int n_side);
void write_pgm(const std::filesystem::path& path, const CVec& image, int n_side);

struct DiagnosticEntry {
  std::string split;
  int index = 0;
  double delta = 0.0;              // rho*^H delta(rho* rho*^H) rho*, unit-norm rho*
  double identity_residual = 0.0;  // relative residual of the J_S expansion (max over probes)
};

std::vector<DiagnosticEntry> diagnose(const DatasetFile& file);
nlohmann::json diagnostics_to_json(const std::vector<DiagnosticEntry>& entries);

/// Relative residual of J_S(rho) = -|rho^H rho*|^2 + ||rho||^2 - delta_quadratic(rho*, rho)
/// with d the noiseless intensities of rho*.
double expansion_residual(const SamplingMatrix& A, const CVec& rho_star, const CVec& rho);

}  // namespace psar
