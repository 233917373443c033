#include "psar/pnp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "psar/forward_operator.hpp"

namespace psar {

int UnrolledConfig::bank_count() const {
  if (tying_map.empty()) return 0;
  return *std::max_element(tying_map.begin(), tying_map.end()) + 1;
}

void UnrolledConfig::validate() const {
  require(stages >= 0, "unrolled config: stage count must be non-negative");
  require(static_cast<int>(tying_map.size()) == stages,
          "unrolled config: tying map must have one entry per stage");
  std::vector<bool> used(static_cast<size_t>(bank_count()), false);
  for (int b : tying_map) {
    require(b >= 0, "unrolled config: negative bank index");
    used[static_cast<size_t>(b)] = true;
  }
  require(std::all_of(used.begin(), used.end(), [](bool u) { return u; }),
          "unrolled config: bank indices must be contiguous from 0");
  require(training.epochs >= 0, "unrolled config: epochs must be non-negative");
  require(training.batch_size >= 1, "unrolled config: batch size must be positive");
  require(training.learning_rate > 0, "unrolled config: learning rate must be positive");
}

size_t TrainedModel::parameter_count() const {
  size_t n = 0;
  for (const auto& b : banks) n += b.parameter_count();
  return n;
}

std::vector<double> TrainedModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& b : banks) {
    auto f = b.flatten();
    flat.insert(flat.end(), f.begin(), f.end());
  }
  return flat;
}

void TrainedModel::unflatten(std::span<const double> flat) {
  require(flat.size() == parameter_count(), "model: flat parameter length mismatch");
  size_t off = 0;
  for (auto& b : banks) {
    const size_t n = b.parameter_count();
    b.unflatten(flat.subspan(off, n));
    off += n;
  }
}

TrainedModel init_model(const UnrolledConfig& config) {
  config.validate();
  TrainedModel model;
  model.config = config;
  for (int b = 0; b < config.bank_count(); ++b)
    model.banks.push_back(init_denoiser(config.arch, config.init_seed + static_cast<unsigned>(b)));
  return model;
}

int image_side(Eigen::Index N) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(N))));
  require(N > 0 && static_cast<Eigen::Index>(side) * side == N,
          "image length is not a perfect square");
  return side;
}

CVec pnp_stage(const SpectralOperator& op, const CVec& rho_prev, const DenoiserParams& denoiser) {
  require(rho_prev.norm() > 0, "pnp_stage: previous iterate is zero");
  const CVec w = op.apply(rho_prev);
  const CVec z = denoiser_apply(denoiser, w, image_side(w.size()));
  const double nz = z.norm();
  if (!(nz >= 1e-30)) throw NumericalError("pnp_stage: degenerate normalization (norm < 1e-30)");
  return z / nz;
}

CVec unrolled_forward(const SpectralOperator& op, const TrainedModel& model,
                      std::vector<double>* stage_norms) {
  const UnrolledConfig& cfg = model.config;
  cfg.validate();
  require(static_cast<int>(model.banks.size()) == cfg.bank_count(),
          "unrolled_forward: bank count does not match tying map");
  const int n_side = image_side(op.size());
  CVec rho = fixed_initial_vector(op.size());
  for (int l = 0; l < cfg.stages; ++l) {
    const CVec w = op.apply(rho);
    const CVec z = denoiser_apply(model.banks[static_cast<size_t>(cfg.tying_map[l])], w, n_side);
    const double nz = z.norm();
    if (!(nz >= 1e-30))
      throw NumericalError("unrolled_forward: degenerate normalization at stage " +
                           std::to_string(l + 1));
    if (stage_norms) stage_norms->push_back(nz);
    rho = z / nz;
    if (std::abs(rho.norm() - 1.0) > 1e-12)
      throw NumericalError("unrolled_forward: stage output lost unit norm");
  }
  return rho;
}

double phase_aligned_error(const CVec& rho, const CVec& rho_ref) {
  require(rho.size() == rho_ref.size(), "phase_aligned_error: length mismatch");
  const double e = rho.squaredNorm() + rho_ref.squaredNorm() - 2.0 * std::abs(rho_ref.dot(rho));
  return std::max(e, 0.0);
}

double optimal_alignment_phase(const CVec& rho, const CVec& rho_ref) {
  return std::arg(rho_ref.dot(rho));
}

ad::Var unrolled_forward_tape(ad::Tape& tape, const SpectralOperator& op,
                              const std::vector<DenoiserVars>& banks,
                              const UnrolledConfig& config) {
  const int n_side = image_side(op.size());
  ad::Var x = tape.leaf(ad::to_planes(fixed_initial_vector(op.size()), n_side));
  auto apply = [&op](const CVec& v) { return op.apply(v); };
  for (int l = 0; l < config.stages; ++l) {
    // X is Hermitian, so it is its own adjoint.
    const ad::Var w = ad::complex_linear(x, apply, apply);
    const ad::Var z = denoiser_forward(banks[static_cast<size_t>(config.tying_map[l])], w);
    x = ad::normalize(z);
  }
  return x;
}

namespace {

struct SampleGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

SampleGradient sample_gradient(const SpectralOperator& op, const TrainedModel& model,
                               const CVec& target) {
  ad::Tape tape;
  std::vector<DenoiserVars> banks;
  for (const auto& b : model.banks) banks.push_back(bind_denoiser(tape, b, true));
  const ad::Var out = unrolled_forward_tape(tape, op, banks, model.config);
  const ad::Var loss = ad::phase_aligned_error(out, target);
  tape.backward(loss);

  SampleGradient sg;
  sg.loss = loss.value()[0];
  sg.gradient.reserve(model.parameter_count());
  for (const auto& b : banks)
    for (const auto& [w, bias] : b.layers)
      for (const ad::Var& v : {w, bias}) {
        if (v.grad().size() == 0) {
          sg.gradient.insert(sg.gradient.end(), v.value().size(), 0.0);
        } else {
          sg.gradient.insert(sg.gradient.end(), v.grad().data().begin(), v.grad().data().end());
        }
      }
  return sg;
}

}  // namespace

LossAndGradient training_loss(std::span<const SpectralOperator* const> ops,
                              const TrainedModel& model, std::span<const CVec> targets,
                              bool deterministic, unsigned threads) {
  require(ops.size() == targets.size() && !ops.empty(),
          "training_loss: need one target per operator");
  const size_t B = ops.size();
  const size_t P = model.parameter_count();

  LossAndGradient out;
  out.gradient.assign(P, 0.0);
  out.per_sample.assign(B, 0.0);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(B)));
  if (threads == 1) {
    for (size_t i = 0; i < B; ++i) {
      const SampleGradient sg = sample_gradient(*ops[i], model, targets[i]);
      out.per_sample[i] = sg.loss;
      for (size_t p = 0; p < P; ++p) out.gradient[p] += sg.gradient[p];
    }
  } else {
    std::vector<SampleGradient> results(deterministic ? B : 0);
    std::mutex mu;
    std::exception_ptr failure;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          for (size_t i = t; i < B; i += threads) {
            try {
              SampleGradient sg = sample_gradient(*ops[i], model, targets[i]);
              out.per_sample[i] = sg.loss;
              if (deterministic) {
                results[i] = std::move(sg);
              } else {
                std::lock_guard lock(mu);
                for (size_t p = 0; p < P; ++p) out.gradient[p] += sg.gradient[p];
              }
            } catch (...) {
              std::lock_guard lock(mu);
              if (!failure) failure = std::current_exception();
            }
          }
        });
    }
    if (failure) std::rethrow_exception(failure);
    if (deterministic)
      for (const auto& sg : results)
        for (size_t p = 0; p < P; ++p) out.gradient[p] += sg.gradient[p];
  }

  const double inv = 1.0 / static_cast<double>(B);
  for (auto& g : out.gradient) g *= inv;
  out.loss = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) * inv;
  return out;
}

TrainedModel train(const Dataset& dataset, const UnrolledConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  require(dataset.has_ground_truth(), "train: dataset lacks ground truth");
  TrainedModel model = init_model(config);
  if (config.training.epochs == 0) return model;

  const SamplingMatrix A =
      build_sampling_matrix(make_circular_geometry(dataset.geometry), make_scene_grid(dataset.grid));
  std::vector<SpectralOperator> ops;
  std::vector<CVec> targets;
  ops.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    ops.emplace_back(A, s.measurements);
    const CVec& rho = s.scene->reflectivity;
    const double n = rho.norm();
    require(n > 0, "train: ground-truth image is zero");
    targets.push_back(rho / n);
  }

  const TrainingConfig& tc = config.training;
  std::vector<double> params = model.flatten();
  OptimizerState state = make_optimizer_state(params.size(), {.learning_rate = tc.learning_rate});
  std::mt19937_64 shuffle_rng(tc.seed);
  std::vector<size_t> order(ops.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(tc.batch_size));
      std::vector<const SpectralOperator*> batch_ops;
      std::vector<CVec> batch_targets;
      for (size_t i = start; i < stop; ++i) {
        batch_ops.push_back(&ops[order[i]]);
        batch_targets.push_back(targets[order[i]]);
      }
      LossAndGradient lg;
      try {
        lg = training_loss(batch_ops, model, batch_targets, tc.deterministic, tc.threads);
      } catch (const NumericalError& e) {
        throw TrainingDiverged(std::string("train: ") + e.what(), model.loss_history);
      }
      if (!std::isfinite(lg.loss))
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch + 1),
                               model.loss_history);
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      optimizer_step(params, lg.gradient, state);
      model.unflatten(params);
    }
    epoch_loss /= static_cast<double>(order.size());
    model.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }

  if (model.loss_history.back() > model.loss_history.front())
    throw TrainingDiverged("train: final-epoch loss exceeds first-epoch loss",
                           model.loss_history);
  return model;
}

Reconstruction reconstruct(const IntensityMeasurements& d, const SamplingMatrix& A,
                           const TrainedModel& model, const std::optional<CVec>& ground_truth) {
  const auto t0 = std::chrono::steady_clock::now();
  const SpectralOperator op(A, d.values);
  Reconstruction r;
  r.normalized = unrolled_forward(op, model, &r.report.stage_norms);
  r.report.lambda0 = lambda0(d.values);
  r.scaled = std::sqrt(r.report.lambda0) * r.normalized;
  r.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.report.stages = model.config.stages;
  if (ground_truth) {
    const double n = ground_truth->norm();
    const CVec ref = n > 0 ? CVec(*ground_truth / n) : *ground_truth;
    r.report.phase_aligned_error = phase_aligned_error(r.normalized, ref);
  }
  return r;
}

nlohmann::json report_to_json(const ReconstructionReport& r) {
  nlohmann::json j = {{"stages", r.stages},
                      {"stage_norms", r.stage_norms},
                      {"wall_seconds", r.wall_seconds},
                      {"lambda0", r.lambda0}};
  j["phase_aligned_error"] =
      r.phase_aligned_error ? nlohmann::json(*r.phase_aligned_error) : nlohmann::json();
  return j;
}

void to_json(nlohmann::json& j, const DenoiserArch& a) {
  j = {{"depth", a.depth}, {"width", a.width}, {"kernel", a.kernel}, {"residual", a.residual}};
}

void from_json(const nlohmann::json& j, DenoiserArch& a) {
  j.at("depth").get_to(a.depth);
  j.at("width").get_to(a.width);
  j.at("kernel").get_to(a.kernel);
  j.at("residual").get_to(a.residual);
}

void to_json(nlohmann::json& j, const TrainingConfig& t) {
  j = {{"epochs", t.epochs},
       {"batch_size", t.batch_size},
       {"learning_rate", t.learning_rate},
       {"seed", t.seed},
       {"deterministic", t.deterministic},
       {"threads", t.threads}};
}

void from_json(const nlohmann::json& j, TrainingConfig& t) {
  j.at("epochs").get_to(t.epochs);
  j.at("batch_size").get_to(t.batch_size);
  j.at("learning_rate").get_to(t.learning_rate);
  j.at("seed").get_to(t.seed);
  j.at("deterministic").get_to(t.deterministic);
  t.threads = j.value("threads", 1u);
}

void to_json(nlohmann::json& j, const UnrolledConfig& c) {
  j = {{"stages", c.stages},
       {"tying_map", c.tying_map},
       {"arch", c.arch},
       {"init_seed", c.init_seed},
       {"training", c.training}};
}

void from_json(const nlohmann::json& j, UnrolledConfig& c) {
  j.at("stages").get_to(c.stages);
  j.at("tying_map").get_to(c.tying_map);
  j.at("arch").get_to(c.arch);
  j.at("init_seed").get_to(c.init_seed);
  j.at("training").get_to(c.training);
}

Container model_to_container(const TrainedModel& model) {
  Container c;
  c.meta["kind"] = "model";
  c.meta["config"] = model.config;
  // worker count does not affect the result, so it stays out of the file
  c.meta["config"]["training"].erase("threads");
  c.meta["loss_history"] = model.loss_history;
  for (size_t b = 0; b < model.banks.size(); ++b)
    for (size_t l = 0; l < model.banks[b].layers.size(); ++l) {
      const auto& layer = model.banks[b].layers[l];
      const std::string prefix = "bank" + std::to_string(b) + "/layer" + std::to_string(l);
      const auto& ws = layer.weight.shape();
      c.add_real(prefix + "/weight", {ws[0], ws[1], ws[2], ws[3]}, layer.weight.storage());
      c.add_real(prefix + "/bias", {ws[0]}, layer.bias.storage());
    }
  return c;
}

TrainedModel model_from_container(const Container& c) {
  if (c.meta.value("kind", "") != "model") throw FormatError("SARP1: not a model container");
  TrainedModel model;
  try {
    model.config = c.meta.at("config").get<UnrolledConfig>();
    model.loss_history = c.meta.at("loss_history").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SARP1: malformed model header: ") + e.what());
  }
  model = [&] {
    TrainedModel m = init_model(model.config);
    m.loss_history = model.loss_history;
    return m;
  }();
  for (size_t b = 0; b < model.banks.size(); ++b)
    for (size_t l = 0; l < model.banks[b].layers.size(); ++l) {
      auto& layer = model.banks[b].layers[l];
      const std::string prefix = "bank" + std::to_string(b) + "/layer" + std::to_string(l);
      const Blob& w = c.blob(prefix + "/weight");
      const Blob& bias = c.blob(prefix + "/bias");
      if (w.data.size() != layer.weight.size() || bias.data.size() != layer.bias.size())
        throw FormatError("SARP1: parameter blob '" + prefix + "' has the wrong size");
      layer.weight.storage() = w.data;
      layer.bias.storage() = bias.data;
    }
  return model;
}

}  // namespace psar
