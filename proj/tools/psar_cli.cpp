// Command-line front end to the library, one subcommand per workflow step.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "psar/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psar;

namespace {

enum ExitCode { kOk = 0, kInvalidInput = 2, kNumerical = 3, kIo = 4 };

struct CommonOptions {
  std::string preset = "desk";
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_seed) {
  cmd->add_option("--preset", o.preset, "Base configuration")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
  cmd->add_option("--config", o.config, "JSON overrides applied on top of the preset");
  if (with_seed) cmd->add_option("--seed", o.seed, "Override the base seed");
  cmd->add_flag("--deterministic", o.deterministic,
                "Fixed-order reductions so outputs are byte-identical across runs and thread counts");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig c = preset(o.preset);
  if (o.config) c = load_config(*o.config, c);
  return c;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path history_path(const fs::path& model_path) {
  fs::path p = model_path;
  p.replace_extension(".history.json");
  return p;
}

int run_simulate(const CommonOptions& o, const fs::path& out) {
  ExperimentConfig c = resolve_config(o);
  if (o.seed) c.dataset.train_seed = *o.seed;
  const SarGeometry geo = make_circular_geometry(c.geometry);
  const int M = geo.measurement_count();
  const int N = c.grid.pixels_per_side * c.grid.pixels_per_side;
  std::printf("M=%d N=%d M/N=%.2f\n", M, N, static_cast<double>(M) / N);
  write_dataset(out, simulate(c, o.threads));
  std::printf("wrote %s\n", out.string().c_str());
  return kOk;
}

int run_train(const CommonOptions& o, const fs::path& dataset_path, const fs::path& out) {
  ExperimentConfig c = resolve_config(o);
  if (o.seed) c.network.training.seed = *o.seed;
  if (o.deterministic) c.network.training.deterministic = true;
  c.network.training.threads = o.threads;

  const DatasetFile data = read_dataset(dataset_path);
  const Dataset& train_split = data.split("train");
  auto report = [](int epoch, double loss) {
    std::printf("epoch %d loss %.6g\n", epoch, loss);
    std::fflush(stdout);
  };

  const json cfg = config_to_json(c);
  try {
    const TrainedModel model = train(train_split, c.network, report);
    write_container(out, model_to_container(model));
    write_json(history_path(out), {{"loss_history", model.loss_history}, {"config", cfg}});
    std::printf("wrote %s\n", out.string().c_str());
    return kOk;
  } catch (const TrainingDiverged& e) {
    write_json(history_path(out),
               {{"loss_history", e.history()}, {"config", cfg}, {"error", e.what()}});
    throw;
  }
}

int run_reconstruct(const CommonOptions& o, const std::string& method_str,
                    const std::optional<fs::path>& model_path, const fs::path& dataset_path,
                    const std::optional<std::string>& split_name, const fs::path& out) {
  const ExperimentConfig c = resolve_config(o);
  const Method method = parse_method(method_str);
  if (method == Method::pnp && !model_path) throw InvalidArgument("--method pnp requires --model");
  if (method != Method::pnp && model_path)
    throw InvalidArgument("--model only applies to --method pnp");

  std::optional<TrainedModel> model;
  if (model_path) model = model_from_container(read_container(*model_path));
  const DatasetFile data = read_dataset(dataset_path);

  std::vector<std::string> names;
  if (split_name) {
    data.split(*split_name);
    names.push_back(*split_name);
  } else {
    for (const auto& [name, ds] : data.splits)
      if (name != "train") names.push_back(name);
  }
  if (names.empty()) throw InvalidArgument("dataset has no test splits");

  json reports = json::array();
  for (const auto& name : names) {
    const MetricsReport r =
        evaluate(method, data.split(name), name, c, model ? &*model : nullptr, out / name);
    std::printf("%s %s mean_mse=%.6g median_mse=%.6g mean_wall_s=%.4g\n", r.method.c_str(),
                name.c_str(), r.mean_mse, r.median_mse, r.mean_wall_seconds);
    reports.push_back(metrics_to_json(r));
  }
  write_json(out / ("report_" + std::string(method_name(method)) + ".json"),
             {{"method", method_name(method)}, {"splits", reports}});
  return kOk;
}

int run_diagnose(const fs::path& dataset_path, const fs::path& out) {
  const auto entries = diagnose(read_dataset(dataset_path));
  const json j = diagnostics_to_json(entries);
  write_json(out, j);
  const json& s = j.at("summary");
  std::printf("samples=%zu max_identity_residual=%.3g delta_mean=%.6g\n", entries.size(),
              s.at("max_identity_residual").get<double>(), s.at("delta_mean").get<double>());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phaseless SAR imaging with unrolled plug-and-play networks"};
  app.require_subcommand(1);

  CommonOptions sim_opts, train_opts, rec_opts;
  fs::path sim_out, train_dataset, train_out, rec_dataset, rec_out, diag_dataset, diag_out;
  std::optional<fs::path> rec_model;
  std::optional<std::string> rec_split;
  std::string method;

  auto* sim = app.add_subcommand("simulate", "Generate a train/test dataset file");
  add_common(sim, sim_opts, true);
  sim->add_option("--out", sim_out, "Dataset file to write")->required();

  auto* tr = app.add_subcommand("train", "Train the unrolled network on the train split");
  add_common(tr, train_opts, true);
  tr->add_option("--dataset", train_dataset, "Dataset file")->required();
  tr->add_option("--out", train_out, "Model file to write (history goes next to it)")->required();

  auto* rec = app.add_subcommand("reconstruct", "Reconstruct test splits and score them");
  add_common(rec, rec_opts, false);
  rec->add_option("--method", method, "Reconstruction method")
      ->required()
      ->check(CLI::IsMember({"pnp", "spectral", "wf"}));
  rec->add_option("--model", rec_model, "Trained model file (pnp only)");
  rec->add_option("--dataset", rec_dataset, "Dataset file")->required();
  rec->add_option("--split", rec_split, "Only this split (default: every test split)");
  rec->add_option("--out", rec_out, "Output directory for images and the report")->required();

  auto* diag = app.add_subcommand("diagnose", "Report the delta perturbation per sample");
  diag->add_option("--dataset", diag_dataset, "Dataset file")->required();
  diag->add_option("--out", diag_out, "Diagnostics JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*sim) return run_simulate(sim_opts, sim_out);
    if (*tr) return run_train(train_opts, train_dataset, train_out);
    if (*rec) return run_reconstruct(rec_opts, method, rec_model, rec_dataset, rec_split, rec_out);
    if (*diag) return run_diagnose(diag_dataset, diag_out);
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalidInput;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalidInput;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  }
  return kInvalidInput;
}
