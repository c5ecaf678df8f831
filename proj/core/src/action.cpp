#include "rabi/action.hpp"

#include <cmath>
#include <stdexcept>

#include "rabi/fourier.hpp"

namespace rabi {
namespace {

double quartic_profile(double u) {
  return u >= 1.0 ? 0.0 : std::pow(1.0 - u, 4);
}

}  // namespace

double AlmostComplexSpec::bump(const Eigen::VectorXd& x, double eta) const {
  const auto& p = *pert_;
  const double ux = (x - p.v_center).squaredNorm() / (p.v_radius * p.v_radius);
  const double ue = (eta * eta) / (p.ng * p.ng);
  return p.amplitude * quartic_profile(ux) * quartic_profile(ue);
}

Eigen::MatrixXd AlmostComplexSpec::matrix(const Eigen::VectorXd& x,
                                          double eta) const {
  const int d = static_cast<int>(x.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
  double a = 0.0;
  if (pert_) a = bump(x, eta);
  // Per (q,p) pair: [[a, -(1+a^2)], [1, -a]] squares to -Id and is
  // omega0-compatible for every real a; a = 0 is the standard block.
  for (int i = 0; i + 1 < d; i += 2) {
    j(i, i) = a;
    j(i, i + 1) = -(1.0 + a * a);
    j(i + 1, i) = 1.0;
    j(i + 1, i + 1) = -a;
  }
  return j;
}

Eigen::VectorXd AlmostComplexSpec::apply(const Eigen::VectorXd& x, double eta,
                                         const Eigen::VectorXd& v) const {
  if (!pert_) return apply_j0(v);
  const double a = bump(x, eta);
  Eigen::VectorXd out(v.size());
  for (int i = 0; i + 1 < v.size(); i += 2) {
    out(i) = a * v(i) - (1.0 + a * a) * v(i + 1);
    out(i + 1) = v(i) - a * v(i + 1);
  }
  return out;
}

double AlmostComplexSpec::norm_inf() const {
  if (!pert_) return 1.0;
  // The deformation parameter is radially monotone, so a grid over the
  // support captures the sup to sampling accuracy.
  double worst = 1.0;
  const int d = static_cast<int>(pert_->v_center.size());
  for (int ir = 0; ir <= 20; ++ir) {
    const double r = pert_->v_radius * ir / 20.0;
    for (int ie = 0; ie <= 20; ++ie) {
      const double eta = -pert_->ng + 2.0 * pert_->ng * ie / 20.0;
      Eigen::VectorXd x = pert_->v_center;
      x(0) += r;
      const Eigen::MatrixXd j = matrix(x, eta);
      worst = std::max(worst, j.operatorNorm());
      (void)d;
    }
  }
  return worst;
}

double action(const HamiltonianModel& h, const LoopMultiplier& u) {
  const Eigen::MatrixXd dv = spectral_derivative_rows(u.loop.samples());
  const int n = u.loop.n_samples();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd x = u.loop.samples().col(j);
    acc += lambda0(x, dv.col(j)) - u.eta * h.value(x);
  }
  return acc / n;
}

double action_differential(const HamiltonianModel& h, const LoopMultiplier& u,
                           const TangentVector& w) {
  const Eigen::MatrixXd dv = spectral_derivative_rows(u.loop.samples());
  const int n = u.loop.n_samples();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd x = u.loop.samples().col(j);
    const Eigen::VectorXd flow = dv.col(j) - u.eta * h.hamiltonian_field(x);
    acc += omega0(w.xi.col(j), flow) - w.sigma * h.value(x);
  }
  return acc / n;
}

TangentVector action_gradient(const HamiltonianModel& h,
                              const AlmostComplexSpec& j,
                              const LoopMultiplier& u) {
  const Eigen::MatrixXd dv = spectral_derivative_rows(u.loop.samples());
  const int n = u.loop.n_samples();
  TangentVector g = TangentVector::zero(u.loop.dim(), n);
  double mean_h = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd x = u.loop.samples().col(k);
    const Eigen::VectorXd flow = dv.col(k) - u.eta * h.hamiltonian_field(x);
    g.xi.col(k) = -j.apply(x, u.eta, flow);
    mean_h += h.value(x);
  }
  g.sigma = -mean_h / n;
  return g;
}

TangentVector action_gradient(const HamiltonianModel& h,
                              const LoopMultiplier& u) {
  return action_gradient(h, AlmostComplexSpec{}, u);
}

TangentVector hessian_apply(const HamiltonianModel& h, const LoopMultiplier& u,
                            const TangentVector& w,
                            const AlmostComplexSpec& j) {
  if (!j.is_standard())
    throw std::invalid_argument(
        "hessian_apply is stated in the standard J0 chart");
  const Eigen::MatrixXd dxi = spectral_derivative_rows(w.xi);
  const int n = u.loop.n_samples();
  TangentVector out = TangentVector::zero(u.loop.dim(), n);
  double mean_dh = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd x = u.loop.samples().col(k);
    const Eigen::VectorXd a =
        dxi.col(k) - w.sigma * h.hamiltonian_field(x);
    out.xi.col(k) = -apply_j0(a) - u.eta * (h.hessian(x) * w.xi.col(k));
    mean_dh += h.gradient(x).dot(w.xi.col(k));
  }
  out.sigma = -mean_dh / n;
  return out;
}

double dhy_identity_residual(
    const HamiltonianModel& h, const LoopMultiplier& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& y,
    double* rhs_out) {
  const int n = u.loop.n_samples();
  TangentVector w = TangentVector::zero(u.loop.dim(), n);
  double rhs = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd x = u.loop.samples().col(k);
    w.xi.col(k) = y(x);
    rhs += h.gradient(x).dot(w.xi.col(k));
  }
  w.sigma = u.eta;
  rhs *= u.eta / n;
  if (rhs_out) *rhs_out = rhs;
  const double lhs = action(h, u) - action_differential(h, u, w);
  return std::abs(lhs - rhs);
}

double gj_norm_sq(const AlmostComplexSpec& j, const LoopMultiplier& u,
                  const TangentVector& w) {
  const int n = u.loop.n_samples();
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd x = u.loop.samples().col(k);
    acc += omega0(w.xi.col(k), j.apply(x, u.eta, w.xi.col(k)));
  }
  return acc / n + w.sigma * w.sigma;
}

}  // namespace rabi
