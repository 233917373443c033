#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "psar/container.hpp"
#include "psar/denoiser.hpp"
#include "psar/optimizer.hpp"
#include "psar/sar_model.hpp"
#include "psar/spectral.hpp"

namespace psar {

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  /// Reduce per-sample gradients in sample order. Without it, worker results
  /// are summed in completion order.
  bool deterministic = true;
  unsigned threads = 1;
};

struct UnrolledConfig {
  int stages = 4;
  std::vector<int> tying_map{0, 0, 1, 1};  // stage -> denoiser bank
  DenoiserArch arch;
  std::uint64_t init_seed = 7;
  TrainingConfig training;

  int bank_count() const;
  void validate() const;
};

struct TrainedModel {
  UnrolledConfig config;
  std::vector<DenoiserParams> banks;
  std::vector<double> loss_history;  // mean training loss per epoch

  size_t parameter_count() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

/// Freshly initialized banks. With the residual architecture every bank is
/// the identity, so the network reduces to plain power iterations.
TrainedModel init_model(const UnrolledConfig& config);

/// Side length of a square image with N pixels; throws if N is not square.
int image_side(Eigen::Index N);

/// w = X rho_prev, z = D(w), rho = z / ||z||.
CVec pnp_stage(const SpectralOperator& op, const CVec& rho_prev, const DenoiserParams& denoiser);

/// L stages from fixed_initial_vector. Optionally records ||z_l|| per stage.
CVec unrolled_forward(const SpectralOperator& op, const TrainedModel& model,
                      std::vector<double>* stage_norms = nullptr);

/// min over theta of ||rho - e^{i theta} rho_ref||^2, in closed form
/// ||rho||^2 + ||rho_ref||^2 - 2 |rho_ref^H rho|. The minimizing theta is
/// arg(rho_ref^H rho).
double phase_aligned_error(const CVec& rho, const CVec& rho_ref);
double optimal_alignment_phase(const CVec& rho, const CVec& rho_ref);

/// Builds the unrolled network on a tape with the given bank variables.
ad::Var unrolled_forward_tape(ad::Tape& tape, const SpectralOperator& op,
                              const std::vector<DenoiserVars>& banks,
                              const UnrolledConfig& config);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d model.flatten()
  std::vector<double> per_sample;
};

/// Mean phase-aligned error over the batch and its gradient w.r.t. all banks.
LossAndGradient training_loss(std::span<const SpectralOperator* const> ops,
                              const TrainedModel& model, std::span<const CVec> targets,
                              bool deterministic = true, unsigned threads = 1);

/// Raised when training produces a non-finite loss; carries the history so far.
class TrainingDiverged : public NumericalError {
public:
  TrainingDiverged(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Called after each epoch with the 1-based epoch number.
using EpochCallback = std::function<void(int epoch, double mean_loss)>;

TrainedModel train(const Dataset& dataset, const UnrolledConfig& config,
                   const EpochCallback& on_epoch = {});

struct ReconstructionReport {
  int stages = 0;
  std::vector<double> stage_norms;
  double wall_seconds = 0.0;
  double lambda0 = 0.0;
  std::optional<double> phase_aligned_error;  // vs the normalized ground truth, when given
};

struct Reconstruction {
  CVec normalized;  // rho_L, unit norm
  CVec scaled;      // sqrt(lambda0) * rho_L, for display
  ReconstructionReport report;
};

Reconstruction reconstruct(const IntensityMeasurements& d, const SamplingMatrix& A,
                           const TrainedModel& model,
                           const std::optional<CVec>& ground_truth = std::nullopt);

nlohmann::json report_to_json(const ReconstructionReport& r);

Container model_to_container(const TrainedModel& model);
TrainedModel model_from_container(const Container& c);

void to_json(nlohmann::json& j, const DenoiserArch& a);
void from_json(const nlohmann::json& j, DenoiserArch& a);
void to_json(nlohmann::json& j, const TrainingConfig& t);
void from_json(const nlohmann::json& j, TrainingConfig& t);
void to_json(nlohmann::json& j, const UnrolledConfig& c);
void from_json(const nlohmann::json& j, UnrolledConfig& c);

}  // namespace psar
