#include "psar/denoiser.hpp"

#include <cmath>
#include <random>

namespace psar {

size_t DenoiserParams::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void DenoiserParams::validate() const {
  require(!layers.empty(), "denoiser: no layers");
  require(arch.kernel % 2 == 1, "denoiser: kernel size must be odd");
  require(static_cast<int>(layers.size()) == arch.depth, "denoiser: layer count != depth");
  require(layers.front().weight.shape()[1] == 2, "denoiser: first layer must take 2 channels");
  require(layers.back().weight.shape()[0] == 2, "denoiser: last layer must emit 2 channels");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& w = layers[i].weight.shape();
    require(w[2] == arch.kernel && w[3] == arch.kernel, "denoiser: kernel shape mismatch");
    require(layers[i].bias.shape() == ad::Tensor::Shape{w[0], 1, 1, 1},
            "denoiser: bias shape mismatch");
    if (i > 0)
      require(layers[i - 1].weight.shape()[0] == w[1], "denoiser: channel chain broken");
  }
}

std::vector<double> DenoiserParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
    flat.insert(flat.end(), l.bias.data().begin(), l.bias.data().end());
  }
  return flat;
}

void DenoiserParams::unflatten(std::span<const double> flat) {
  require(flat.size() == parameter_count(), "denoiser: flat parameter length mismatch");
  size_t off = 0;
  for (auto& l : layers) {
    for (auto* t : {&l.weight, &l.bias}) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t->size(), t->data().begin());
      off += t->size();
    }
  }
}

DenoiserParams init_denoiser(const DenoiserArch& arch, std::uint64_t seed) {
  require(arch.depth >= 1, "denoiser: depth must be at least 1");
  require(arch.width >= 1, "denoiser: width must be at least 1");
  require(arch.kernel >= 1 && arch.kernel % 2 == 1, "denoiser: kernel size must be odd");
  DenoiserParams p;
  p.arch = arch;
  std::mt19937_64 rng(seed);
  const int k = arch.kernel;
  for (int i = 0; i < arch.depth; ++i) {
    const int in = i == 0 ? 2 : arch.width;
    const int out = i == arch.depth - 1 ? 2 : arch.width;
    ConvLayer layer{ad::Tensor({out, in, k, k}), ad::Tensor({out, 1, 1, 1})};
    if (i != arch.depth - 1) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& v : layer.weight.storage()) v = u(rng);
      for (auto& v : layer.bias.storage()) v = u(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

DenoiserVars bind_denoiser(ad::Tape& tape, const DenoiserParams& params, bool requires_grad) {
  params.validate();
  DenoiserVars vars;
  vars.residual = params.arch.residual;
  for (const auto& l : params.layers)
    vars.layers.emplace_back(tape.leaf(l.weight, requires_grad), tape.leaf(l.bias, requires_grad));
  return vars;
}

ad::Var denoiser_forward(const DenoiserVars& vars, ad::Var x) {
  ad::Var h = x;
  for (size_t i = 0; i < vars.layers.size(); ++i) {
    h = ad::conv2d(h, vars.layers[i].first, vars.layers[i].second);
    if (i + 1 < vars.layers.size()) h = ad::relu(h);
  }
  return vars.residual ? ad::add(x, h) : h;
}

CVec denoiser_apply(const DenoiserParams& params, const CVec& image, int n_side) {
  require(n_side > 0 && image.size() == static_cast<Eigen::Index>(n_side) * n_side,
          "denoiser_apply: image length is not n_side^2");
  ad::Tape tape;
  const DenoiserVars vars = bind_denoiser(tape, params, false);
  const ad::Var x = tape.leaf(ad::to_planes(image, n_side));
  return ad::from_planes(denoiser_forward(vars, x).value());
}

}  // namespace psar
