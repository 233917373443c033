#pragma once

#include <cstdint>
#include <vector>

#include "psar/autodiff.hpp"

namespace psar {

struct DenoiserArch {
  int depth = 6;   // number of conv layers
  int width = 16;  // hidden channels
  int kernel = 3;
  bool residual = true;
};

struct ConvLayer {
  ad::Tensor weight;  // (out, in, k, k)
  ad::Tensor bias;    // (out, 1, 1, 1)
};

/// Conv/relu stack mapping 2 channels (real, imag) to 2 channels.
struct DenoiserParams {
  DenoiserArch arch;
  std::vector<ConvLayer> layers;

  size_t parameter_count() const;
  void validate() const;

  /// Weights then bias per layer, in layer order.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; the last layer is zeroed so
/// a residual network starts as the identity.
DenoiserParams init_denoiser(const DenoiserArch& arch, std::uint64_t seed);

/// Parameters placed on a tape.
struct DenoiserVars {
  bool residual = true;
  std::vector<std::pair<ad::Var, ad::Var>> layers;  // (weight, bias)
};

DenoiserVars bind_denoiser(ad::Tape& tape, const DenoiserParams& params, bool requires_grad);

/// x: (1, 2, n, n). No relu after the final layer.
ad::Var denoiser_forward(const DenoiserVars& vars, ad::Var x);

CVec denoiser_apply(const DenoiserParams& params, const CVec& image, int n_side);

}  // namespace psar
