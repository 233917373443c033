#include "psar/spectral.hpp"

#include <cmath>

namespace psar {

SpectralOperator::SpectralOperator(const SamplingMatrix& A, RVec d) : A_(&A), d_(std::move(d)) {
  require(d_.size() == A.rows(), "SpectralOperator: measurement length does not match operator");
}

CVec SpectralOperator::apply(const CVec& v) const {
  CVec y = A_->forward(v);
  y.array() *= d_.array().cast<Complex>();
  return A_->adjoint(y) / static_cast<double>(A_->rows());
}

CVec spectral_apply(const SpectralOperator& op, const CVec& v) { return op.apply(v); }

PowerMethodReport power_method(const SpectralOperator& op, const CVec& v0, double tol,
                               int max_iters) {
  require(v0.size() == op.size(), "power_method: start vector length does not match operator");
  require(tol > 0, "power_method: tol must be positive");
  const double n0 = v0.norm();
  require(n0 > 0, "power_method: start vector is zero");

  PowerMethodReport rep;
  CVec v = v0 / n0;
  for (int it = 1; it <= max_iters; ++it) {
    CVec w = op.apply(v);
    rep.rayleigh_history.push_back(v.dot(w).real());
    const double nw = w.norm();
    if (!(nw > 0) || !std::isfinite(nw))
      throw NumericalError("power_method: operator output vanished or is not finite");
    w /= nw;
    const Complex overlap = w.dot(v);  // w^H v
    const double mag = std::abs(overlap);
    const Complex phase = mag > 0 ? overlap / mag : Complex(1.0, 0.0);
    const double change = (w * phase - v).norm();
    v = std::move(w);
    rep.iterations = it;
    if (change <= tol) {
      rep.converged = true;
      break;
    }
  }

  const CVec xv = op.apply(v);
  rep.rayleigh = v.dot(xv).real();
  rep.residual = (xv - rep.rayleigh * v).norm();
  rep.negative_dominant = rep.rayleigh < 0;
  rep.eigenvector = std::move(v);
  return rep;
}

double lambda0(const RVec& d) {
  if (d.size() == 0) return 0.0;
  return d.norm() / std::sqrt(2.0 * static_cast<double>(d.size()));
}

CVec fixed_initial_vector(int N) {
  require(N >= 1, "fixed_initial_vector: N must be positive");
  return CVec::Constant(N, Complex(1.0 / std::sqrt(static_cast<double>(N)), 0.0));
}

SpectralEstimate spectral_estimate_report(const SpectralOperator& op,
                                          const PowerMethodOptions& options) {
  const double lam = lambda0(op.measurements());
  if (lam == 0.0) {
    SpectralEstimate out;
    out.rho0 = CVec::Zero(op.size());
    out.report.eigenvector = fixed_initial_vector(op.size());
    out.report.converged = true;
    return out;
  }
  SpectralEstimate out;
  out.report = power_method(op, fixed_initial_vector(op.size()), options.tol, options.max_iters);
  out.rho0 = std::sqrt(lam) * out.report.eigenvector;
  return out;
}

CVec spectral_estimate(const SpectralOperator& op, const PowerMethodOptions& options) {
  return spectral_estimate_report(op, options).rho0;
}

double j_s(const SpectralOperator& op, const CVec& rho) {
  require(rho.size() == op.size(), "j_s: image length does not match operator");
  return -rho.dot(op.apply(rho)).real() + rho.squaredNorm();
}

double delta_quadratic(const SamplingMatrix& A, const CVec& rho_star, const CVec& rho) {
  require(rho_star.size() == A.cols() && rho.size() == A.cols(),
          "delta_quadratic: image length does not match operator");
  const RVec d_star = A.forward(rho_star).cwiseAbs2();
  const RVec d = A.forward(rho).cwiseAbs2();
  return d_star.dot(d) / static_cast<double>(A.rows()) - std::norm(rho.dot(rho_star));
}

}  // namespace psar
