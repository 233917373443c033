#include "psar/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace psar::ad {

namespace {

size_t shape_size(const Tensor::Shape& s) {
  return static_cast<size_t>(s[0]) * s[1] * s[2] * s[3];
}

Tape& same_tape(Var a, Var b) {
  require(a.tape != nullptr && a.tape == b.tape, "autodiff: operands live on different tapes");
  return *a.tape;
}

Var checked(Tape& tape, Tensor value, std::vector<int> parents, Tape::BackwardFn fn,
            const char* op) {
  if (!value.all_finite())
    throw NumericalError(std::string("autodiff: non-finite output from ") + op);
  return tape.record(std::move(value), std::move(parents), std::move(fn));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape_size(shape), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  require(data_.size() == shape_size(shape_), "Tensor: data does not match shape");
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  require(same_shape(o), "Tensor +=: shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::vector<int> parents, BackwardFn backward) {
  Node n;
  const int self = static_cast<int>(nodes_.size());
  for (int p : parents) {
    assert(p >= 0 && p < self && "tape parents must precede their children");
    n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  }
  n.value = std::move(value);
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, self};
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value))
    n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::accumulate(int id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  grad_buffer(id) += g;
}

void Tape::backward(Var loss) {
  require(loss.tape == this, "backward: loss belongs to another tape");
  require(nodes_[loss.id].value.size() == 1, "backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

Var conv2d(Var x, Var weight, Var bias) {
  Tape& tape = same_tape(x, weight);
  same_tape(x, bias);
  const Tensor& in = x.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  const int B = in.shape()[0], Cin = in.shape()[1], H = in.shape()[2], W = in.shape()[3];
  const int Cout = w.shape()[0], wCin = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  require(wCin == Cin, "conv2d: kernel input channels do not match input");
  require(kh == kw && kh % 2 == 1, "conv2d: kernel must be square with odd size");
  require(b.shape() == Tensor::Shape{Cout, 1, 1, 1}, "conv2d: bias must be (Cout, 1, 1, 1)");
  const int pad = kh / 2;

  // Calls f(oy, ox0, ox1, iy, ix_offset) for every valid output row segment of a tap.
  auto for_tap = [=](int ky, int kx, auto&& f) {
    const int dy = ky - pad, dx = kx - pad;
    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
    for (int y = y0; y < y1; ++y) f(y, x0, x1, y + dy, dx);
  };

  Tensor out({B, Cout, H, W});
  for (int n = 0; n < B; ++n)
    for (int co = 0; co < Cout; ++co) {
      double* o = &out.at(n, co, 0, 0);
      std::fill(o, o + H * W, b[co]);
      for (int ci = 0; ci < Cin; ++ci) {
        const double* src = &in.at(n, ci, 0, 0);
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const double wv = w.at(co, ci, ky, kx);
            for_tap(ky, kx, [&](int y, int xa, int xb, int iy, int dx) {
              double* orow = o + y * W;
              const double* irow = src + iy * W + dx;
              for (int xx = xa; xx < xb; ++xx) orow[xx] += wv * irow[xx];
            });
          }
      }
    }

  const int xi = x.id, wi = weight.id, bi = bias.id;
  return checked(
      tape, std::move(out), {xi, wi, bi},
      [=](Tape& t, const Tensor& g) {
        const Tensor& in = t.value(xi);
        const Tensor& w = t.value(wi);
        if (t.requires_grad(bi)) {
          Tensor& gb = t.grad_buffer(bi);
          for (int n = 0; n < B; ++n)
            for (int co = 0; co < Cout; ++co) {
              const double* gp = &g.at(n, co, 0, 0);
              double s = 0.0;
              for (int i = 0; i < H * W; ++i) s += gp[i];
              gb[co] += s;
            }
        }
        if (t.requires_grad(wi)) {
          Tensor& gw = t.grad_buffer(wi);
          for (int n = 0; n < B; ++n)
            for (int co = 0; co < Cout; ++co) {
              const double* gp = &g.at(n, co, 0, 0);
              for (int ci = 0; ci < Cin; ++ci) {
                const double* src = &in.at(n, ci, 0, 0);
                for (int ky = 0; ky < kh; ++ky)
                  for (int kx = 0; kx < kw; ++kx) {
                    double s = 0.0;
                    for_tap(ky, kx, [&](int y, int xa, int xb, int iy, int dx) {
                      const double* grow = gp + y * W;
                      const double* irow = src + iy * W + dx;
                      for (int xx = xa; xx < xb; ++xx) s += grow[xx] * irow[xx];
                    });
                    gw.at(co, ci, ky, kx) += s;
                  }
              }
            }
        }
        if (t.requires_grad(xi)) {
          Tensor& gx = t.grad_buffer(xi);
          for (int n = 0; n < B; ++n)
            for (int co = 0; co < Cout; ++co) {
              const double* gp = &g.at(n, co, 0, 0);
              for (int ci = 0; ci < Cin; ++ci) {
                double* dst = &gx.at(n, ci, 0, 0);
                for (int ky = 0; ky < kh; ++ky)
                  for (int kx = 0; kx < kw; ++kx) {
                    const double wv = w.at(co, ci, ky, kx);
                    for_tap(ky, kx, [&](int y, int xa, int xb, int iy, int dx) {
                      const double* grow = gp + y * W;
                      double* drow = dst + iy * W + dx;
                      for (int xx = xa; xx < xb; ++xx) drow[xx] += wv * grow[xx];
                    });
                  }
              }
            }
        }
      },
      "conv2d");
}

Var relu(Var x) {
  Tape& tape = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.storage()) v = v > 0.0 ? v : 0.0;
  const int xi = x.id;
  return checked(
      tape, std::move(out), {xi},
      [xi](Tape& t, const Tensor& g) {
        const Tensor& in = t.value(xi);
        Tensor gx(in.shape());
        for (size_t i = 0; i < in.size(); ++i) gx[i] = in[i] > 0.0 ? g[i] : 0.0;
        t.accumulate(xi, gx);
      },
      "relu");
}

Var add(Var x, Var y) {
  Tape& tape = same_tape(x, y);
  require(x.value().same_shape(y.value()), "add: shape mismatch");
  Tensor out = x.value();
  out += y.value();
  const int xi = x.id, yi = y.id;
  return checked(
      tape, std::move(out), {xi, yi},
      [xi, yi](Tape& t, const Tensor& g) {
        t.accumulate(xi, g);
        t.accumulate(yi, g);
      },
      "add");
}

Var scale(Var x, double c) {
  Tensor out = x.value();
  for (auto& v : out.storage()) v *= c;
  const int xi = x.id;
  return checked(
      *x.tape, std::move(out), {xi},
      [xi, c](Tape& t, const Tensor& g) {
        Tensor gx = g;
        for (auto& v : gx.storage()) v *= c;
        t.accumulate(xi, gx);
      },
      "scale");
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const int xi = x.id;
  return checked(
      *x.tape, Tensor::scalar(s), {xi},
      [xi](Tape& t, const Tensor& g) { t.accumulate(xi, Tensor(t.value(xi).shape(), g[0])); },
      "sum");
}

Var dot_const(Var x, const Tensor& c) {
  require(x.value().same_shape(c), "dot_const: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < c.size(); ++i) s += x.value()[i] * c[i];
  const int xi = x.id;
  return checked(
      *x.tape, Tensor::scalar(s), {xi},
      [xi, c](Tape& t, const Tensor& g) {
        Tensor gx = c;
        for (auto& v : gx.storage()) v *= g[0];
        t.accumulate(xi, gx);
      },
      "dot_const");
}

Var normalize(Var x) {
  const double nrm = std::sqrt(x.value().squared_norm());
  if (!(nrm >= 1e-30)) throw NumericalError("normalize: degenerate normalization (norm < 1e-30)");
  Tensor out = x.value();
  for (auto& v : out.storage()) v /= nrm;
  const int xi = x.id;
  const int self = static_cast<int>(x.tape->node_count());
  return checked(
      *x.tape, std::move(out), {xi},
      [xi, self, nrm](Tape& t, const Tensor& g) {
        // d(x/|x|) applied to g: (g - y <y, g>) / |x|
        const Tensor& y = t.value(self);
        double yg = 0.0;
        for (size_t i = 0; i < y.size(); ++i) yg += y[i] * g[i];
        Tensor gx(y.shape());
        for (size_t i = 0; i < y.size(); ++i) gx[i] = (g[i] - y[i] * yg) / nrm;
        t.accumulate(xi, gx);
      },
      "normalize");
}

Tensor to_planes(const CVec& v, int n_side) {
  require(n_side > 0 && v.size() == static_cast<Eigen::Index>(n_side) * n_side,
          "to_planes: image length is not n_side^2");
  Tensor t({1, 2, n_side, n_side});
  const size_t N = static_cast<size_t>(v.size());
  for (size_t i = 0; i < N; ++i) {
    t[i] = v[static_cast<Eigen::Index>(i)].real();
    t[N + i] = v[static_cast<Eigen::Index>(i)].imag();
  }
  return t;
}

CVec from_planes(const Tensor& t) {
  const auto& s = t.shape();
  require(s[0] == 1 && s[1] == 2, "from_planes: expected a (1, 2, H, W) tensor");
  const size_t N = static_cast<size_t>(s[2]) * s[3];
  CVec v(static_cast<Eigen::Index>(N));
  for (size_t i = 0; i < N; ++i) v[static_cast<Eigen::Index>(i)] = Complex(t[i], t[N + i]);
  return v;
}

Var complex_linear(Var x, std::function<CVec(const CVec&)> map,
                   std::function<CVec(const CVec&)> adjoint) {
  const auto& s = x.value().shape();
  require(s[0] == 1 && s[1] == 2 && s[2] == s[3], "complex_linear: expected (1, 2, n, n) input");
  const int n_side = s[2];
  Tensor out = to_planes(map(from_planes(x.value())), n_side);
  const int xi = x.id;
  return checked(
      *x.tape, std::move(out), {xi},
      [xi, n_side, adjoint = std::move(adjoint)](Tape& t, const Tensor& g) {
        // For a complex-linear y = Mx, the real-inner-product adjoint is M^H.
        t.accumulate(xi, to_planes(adjoint(from_planes(g)), n_side));
      },
      "complex_linear");
}

Var phase_aligned_error(Var x, const CVec& target) {
  const CVec v = from_planes(x.value());
  require(v.size() == target.size(), "phase_aligned_error: length mismatch");
  const Complex c = target.dot(v);  // t^H x
  const double mag = std::abs(c);
  const double value = v.squaredNorm() + target.squaredNorm() - 2.0 * mag;
  const int xi = x.id;
  const int n_side = x.value().shape()[2];
  return checked(
      *x.tape, Tensor::scalar(value), {xi},
      [xi, n_side, target, c, mag](Tape& t, const Tensor& g) {
        // d|c| w.r.t. (Re x, Im x) packs to the complex vector (c/|c|) t.
        CVec grad = 2.0 * from_planes(t.value(xi));
        if (mag > 0) grad -= 2.0 * (c / mag) * target;
        grad *= g[0];
        t.accumulate(xi, to_planes(grad, n_side));
      },
      "phase_aligned_error");
}

}  // namespace psar::ad
