#include "rabi/orbit.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "rabi/fourier.hpp"

namespace rabi {
namespace {

// Dense spectral differentiation matrix per grid size, built once.
const Eigen::MatrixXd& derivative_matrix(int n) {
  static std::mutex mutex;
  static std::map<int, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd d = spectral_derivative_rows(basis);
  // rows of `basis` are unit signals; spectral_derivative_rows differentiates
  // each row, so d.row(i) is the derivative of e_i and D = d^T.
  return cache.emplace(n, d.transpose()).first->second;
}

Eigen::VectorXd pack(const LoopMultiplier& u) {
  const int d = u.loop.dim(), n = u.loop.n_samples();
  Eigen::VectorXd z(d * n + 1);
  for (int j = 0; j < n; ++j) z.segment(j * d, d) = u.loop.samples().col(j);
  z(d * n) = u.eta;
  return z;
}

LoopMultiplier unpack(const Eigen::VectorXd& z, int half_dim, int n) {
  const int d = 2 * half_dim;
  Eigen::MatrixXd s(d, n);
  for (int j = 0; j < n; ++j) s.col(j) = z.segment(j * d, d);
  return {Loop(half_dim, std::move(s)), z(d * n)};
}

Eigen::VectorXd residual(const HamiltonianModel& h, const LoopMultiplier& u) {
  const int d = u.loop.dim(), n = u.loop.n_samples();
  const Eigen::MatrixXd dv = spectral_derivative_rows(u.loop.samples());
  Eigen::VectorXd f(d * n + 1);
  double mean_h = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd x = u.loop.samples().col(j);
    f.segment(j * d, d) = dv.col(j) - u.eta * h.hamiltonian_field(x);
    mean_h += h.value(x);
  }
  f(d * n) = mean_h / n;
  return f;
}

Eigen::MatrixXd jacobian(const HamiltonianModel& h, const LoopMultiplier& u) {
  const int d = u.loop.dim(), n = u.loop.n_samples();
  const int dim = d * n + 1;
  const Eigen::MatrixXd& dm = derivative_matrix(n);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd x = u.loop.samples().col(j);
    // d/dv of -eta X^H(v) and the eta column
    const Eigen::MatrixXd dxh = apply_j0_cols(h.hessian(x));
    jac.block(j * d, j * d, d, d) -= u.eta * dxh;
    jac.block(j * d, d * n, d, 1) = -h.hamiltonian_field(x);
    jac.block(d * n, j * d, 1, d) = h.gradient(x).transpose() / n;
    for (int k = 0; k < n; ++k)
      if (dm(j, k) != 0.0)
        jac.block(j * d, k * d, d, d) +=
            dm(j, k) * Eigen::MatrixXd::Identity(d, d);
  }
  return jac;
}

}  // namespace

FindOrbitResult find_orbit(const HamiltonianModel& h,
                           const LoopMultiplier& seed,
                           const FindOrbitOptions& opts) {
  FindOrbitResult out;
  LoopMultiplier u = seed;
  const int half_dim = seed.loop.half_dim();
  const int n = seed.loop.n_samples();

  auto grad_norm = [&](const LoopMultiplier& w) {
    return l2r_norm(action_gradient(h, w));
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    out.grad_norm = grad_norm(u);
    if (out.grad_norm < opts.grad_tol) {
      out.converged = true;
      break;
    }
    if (u.loop.linf_norm() > opts.blow_up_ceiling ||
        std::abs(u.eta) > opts.blow_up_ceiling) {
      out.message = "divergence: state exceeded ceiling";
      return out;
    }
    const Eigen::VectorXd f = residual(h, u);
    const Eigen::MatrixXd jac = jacobian(h, u);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
    cod.setThreshold(1e-10);
    const Eigen::VectorXd step = cod.solve(f);
    if (!step.allFinite()) {
      out.message = "singular Newton step";
      return out;
    }
    // backtracking on |F|
    const double f0 = f.squaredNorm();
    const Eigen::VectorXd z = pack(u);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 25; ++bt) {
      LoopMultiplier trial = unpack(z - alpha * step, half_dim, n);
      if (residual(h, trial).squaredNorm() < f0) {
        u = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.message = "line search stalled";
      out.grad_norm = grad_norm(u);
      out.converged = out.grad_norm < opts.grad_tol;
      break;
    }
  }
  if (!out.converged) {
    out.grad_norm = grad_norm(u);
    out.converged = out.grad_norm < opts.grad_tol;
    if (!out.converged && out.message.empty())
      out.message = "no convergence within iteration budget";
  }
  if (!out.converged) return out;

  CriticalComponent comp;
  const bool constant = u.loop.derivative().l2_norm() < 1e-8 &&
                        std::abs(u.eta) < 1e-8;
  if (constant) {
    // snap onto Sigma x {0}
    const Eigen::VectorXd vbar = closest_point_on_sigma(h, u.loop.mean());
    comp.kind = CriticalComponent::Kind::constant_on_sigma;
    comp.representative = {Loop::constant(vbar, n), 0.0};
  } else {
    comp.kind = CriticalComponent::Kind::nontrivial_orbit;
    comp.representative = u;
  }
  comp.action_value = action(h, comp.representative);
  out.component = comp;
  return out;
}

}  // namespace rabi
