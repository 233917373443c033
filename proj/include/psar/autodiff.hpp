#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "psar/types.hpp"

namespace psar::ad {

/// Dense real tensor with up to four axes (batch, channel, height, width).
/// Unused leading axes are 1.
class Tensor {
public:
  using Shape = std::array<int, 4>;

  Tensor() : shape_{0, 0, 0, 0} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(int b, int c, int h, int w) { return data_[index(b, c, h, w)]; }
  const double& at(int b, int c, int h, int w) const { return data_[index(b, c, h, w)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool all_finite() const;
  double squared_norm() const;
  Tensor& operator+=(const Tensor& o);

private:
  size_t index(int b, int c, int h, int w) const {
    return ((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Shape shape_;
  std::vector<double> data_;
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Tensor& grad() const;
};

/// Records operations in creation order; creation order is a topological
/// order, so backward() is a single reverse sweep.
class Tape {
public:
  /// Receives the output gradient and accumulates into parent gradients.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Var leaf(Tensor value, bool requires_grad = false);
  Var record(Tensor value, std::vector<int> parents, BackwardFn backward);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Adds g into the gradient buffer of node `id` (no-op if it needs none).
  void accumulate(int id, const Tensor& g);
  Tensor& grad_buffer(int id);

  /// Reverse accumulation from a scalar loss; seeds d(loss)/d(loss) = 1.
  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

/// Same-padded cross-correlation. x: (B, Cin, H, W); weight: (Cout, Cin, k, k)
/// with odd k; bias: (Cout, 1, 1, 1).
Var conv2d(Var x, Var weight, Var bias);
Var relu(Var x);
Var add(Var x, Var y);
Var scale(Var x, double c);
Var sum(Var x);
/// sum(x .* c) for a constant tensor c.
Var dot_const(Var x, const Tensor& c);
/// x / ||x|| over all elements. Throws NumericalError when ||x|| < 1e-30.
Var normalize(Var x);

/// Complex-linear map on a (1, 2, H, W) tensor holding (real, imag) planes of
/// a row-major complex image. `adjoint` must be the Hermitian adjoint of `map`.
Var complex_linear(Var x, std::function<CVec(const CVec&)> map,
                   std::function<CVec(const CVec&)> adjoint);

/// ||x||^2 + ||t||^2 - 2 |<t, x>| for the complex image packed in x.
/// Subgradient 0 for the modulus term when <t, x> = 0.
Var phase_aligned_error(Var x, const CVec& target);

Tensor to_planes(const CVec& v, int n_side);
CVec from_planes(const Tensor& t);

}  // namespace psar::ad
