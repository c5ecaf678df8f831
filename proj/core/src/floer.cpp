#include "rabi/floer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "rabi/fourier.hpp"
#include "rabi/tube.hpp"

namespace rabi {

HamiltonianPtr HomotopySpec::model_at(double s) const {
  if (constant_homotopy()) return base;
  const double b = beta(s);
  if (b == 0.0) return base;
  return std::make_shared<PerturbedModel>(base, *bump, b);
}

// ---------------------------------------------------------------------------
// finite differences in s

namespace {

// rows of first-derivative coefficients, offsets relative to the node
struct Stencil {
  std::vector<int> offsets;
  std::vector<double> coeffs;  // include the 1/h factor
};

std::vector<Stencil> build_stencils(int m, double h, int order) {
  if (order != 2 && order != 4 && order != 6)
    throw std::invalid_argument("stencil order must be 2, 4 or 6");
  const int hw = order / 2;
  auto centered = [&](int w) -> Stencil {
    Stencil s;
    switch (w) {
      case 1:
        s.offsets = {-1, 1};
        s.coeffs = {-0.5, 0.5};
        break;
      case 2:
        s.offsets = {-2, -1, 1, 2};
        s.coeffs = {1.0 / 12, -2.0 / 3, 2.0 / 3, -1.0 / 12};
        break;
      default:
        s.offsets = {-3, -2, -1, 1, 2, 3};
        s.coeffs = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 3.0 / 4, -3.0 / 20,
                    1.0 / 60};
        break;
    }
    for (auto& c : s.coeffs) c /= h;
    return s;
  };
  std::vector<Stencil> out(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int w = std::min({hw, i, m - 1 - i});
    if (w >= 1) {
      out[static_cast<size_t>(i)] = centered(w);
    } else if (i == 0) {
      out[0].offsets = {0, 1, 2};
      out[0].coeffs = {-1.5 / h, 2.0 / h, -0.5 / h};
    } else {
      out[static_cast<size_t>(i)].offsets = {0, -1, -2};
      out[static_cast<size_t>(i)].coeffs = {1.5 / h, -2.0 / h, 0.5 / h};
    }
  }
  return out;
}

using PathVec = std::vector<TangentVector>;

double path_dot(const PathVec& a, const PathVec& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += l2r_inner(a[i], b[i]);
  return acc;
}

void path_axpy(PathVec& y, double alpha, const PathVec& x) {
  for (size_t i = 0; i < y.size(); ++i) {
    y[i].xi.noalias() += alpha * x[i].xi;
    y[i].sigma += alpha * x[i].sigma;
  }
}

PathVec path_zero(int m, int dim, int n) {
  PathVec p(static_cast<size_t>(m));
  for (auto& t : p) t = TangentVector::zero(dim, n);
  return p;
}

}  // namespace

std::vector<TangentVector> path_s_derivative(
    const std::vector<LoopMultiplier>& states, double h, int order) {
  const int m = static_cast<int>(states.size());
  const auto stencils = build_stencils(m, h, order);
  std::vector<TangentVector> out(static_cast<size_t>(m));
  const int d = states[0].loop.dim();
  const int n = states[0].loop.n_samples();
  for (int i = 0; i < m; ++i) {
    TangentVector acc = TangentVector::zero(d, n);
    const auto& st = stencils[static_cast<size_t>(i)];
    for (size_t t = 0; t < st.offsets.size(); ++t) {
      const auto& u = states[static_cast<size_t>(i + st.offsets[t])];
      acc.xi.noalias() += st.coeffs[t] * u.loop.samples();
      acc.sigma += st.coeffs[t] * u.eta;
    }
    out[static_cast<size_t>(i)] = std::move(acc);
  }
  return out;
}

void fill_trajectory_diagnostics(FloerTrajectory& traj,
                                 const HomotopySpec& gamma) {
  const int m = traj.nodes();
  traj.action_trace.resize(m);
  traj.grad_norm_trace.resize(m);
  traj.energy_density.resize(m);
  traj.eta_trace.resize(m);
  traj.residual_trace.resize(m);

  std::vector<TangentVector> grads(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto h = gamma.model_at(traj.s_grid(i));
    const auto& u = traj.states[static_cast<size_t>(i)];
    grads[static_cast<size_t>(i)] = action_gradient(*h, gamma.j, u);
    traj.action_trace(i) = action(*h, u);
    traj.grad_norm_trace(i) = l2r_norm(grads[static_cast<size_t>(i)]);
    traj.energy_density(i) =
        gj_norm_sq(gamma.j, u, grads[static_cast<size_t>(i)]);
    traj.eta_trace(i) = u.eta;
  }

  // residual: uniform grids get the full-order stencil, otherwise a local
  // 3-point nonuniform difference
  bool uniform = true;
  for (int i = 2; i < m; ++i)
    if (std::abs((traj.s_grid(i) - traj.s_grid(i - 1)) -
                 (traj.s_grid(1) - traj.s_grid(0))) > 1e-10)
      uniform = false;
  std::vector<TangentVector> ds;
  if (uniform && m >= 3) {
    ds = path_s_derivative(traj.states, traj.s_grid(1) - traj.s_grid(0),
                           traj.stencil_order);
  } else {
    ds.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      const int lo = std::max(0, std::min(i - 1, m - 3));
      const double ha = traj.s_grid(lo + 1) - traj.s_grid(lo);
      const double hb = traj.s_grid(lo + 2) - traj.s_grid(lo + 1);
      const double x = traj.s_grid(i) - traj.s_grid(lo + 1);
      // derivative of the quadratic through the three nodes, at s_i
      const double c0 = (2 * x - hb) / (ha * (ha + hb));
      const double c1 = -(2 * x + ha - hb) / (ha * hb);
      const double c2 = (2 * x + ha) / (hb * (ha + hb));
      TangentVector acc = TangentVector::zero(
          traj.states[0].loop.dim(), traj.states[0].loop.n_samples());
      const double cs[3] = {c0, c1, c2};
      for (int t = 0; t < 3; ++t) {
        const auto& u = traj.states[static_cast<size_t>(lo + t)];
        acc.xi.noalias() += cs[t] * u.loop.samples();
        acc.sigma += cs[t] * u.eta;
      }
      ds[static_cast<size_t>(i)] = std::move(acc);
    }
  }
  traj.residual = 0.0;
  for (int i = 0; i < m; ++i) {
    traj.residual_trace(i) =
        l2r_norm(ds[static_cast<size_t>(i)] - grads[static_cast<size_t>(i)]);
    traj.residual = std::max(traj.residual, traj.residual_trace(i));
  }
}

double midpoint_residual(const FloerTrajectory& traj,
                         const HomotopySpec& gamma) {
  const int m = traj.nodes();
  if (m < 6) return 0.0;
  const double h = traj.step();
  // degree-5 interpolation through 6 nodes, evaluated midway between the
  // 3rd and 4th: weights for the value and the derivative of the Lagrange
  // basis at the midpoint of a uniform grid
  const double wv[6] = {3.0 / 256, -25.0 / 256, 150.0 / 256,
                        150.0 / 256, -25.0 / 256, 3.0 / 256};
  const double wd[6] = {-3.0 / 640, 25.0 / 384, -75.0 / 64,
                        75.0 / 64, -25.0 / 384, 3.0 / 640};
  double worst = 0.0;
  for (int i = 0; i + 5 < m; ++i) {
    const int dim = traj.states[0].loop.dim();
    const int n = traj.states[0].loop.n_samples();
    TangentVector value = TangentVector::zero(dim, n);
    TangentVector deriv = TangentVector::zero(dim, n);
    for (int t = 0; t < 6; ++t) {
      const auto& u = traj.states[static_cast<size_t>(i + t)];
      value.xi.noalias() += wv[t] * u.loop.samples();
      value.sigma += wv[t] * u.eta;
      deriv.xi.noalias() += (wd[t] / h) * u.loop.samples();
      deriv.sigma += (wd[t] / h) * u.eta;
    }
    const double s_mid = 0.5 * (traj.s_grid(i + 2) + traj.s_grid(i + 3));
    const LoopMultiplier mid{Loop(dim / 2, value.xi), value.sigma};
    const TangentVector g =
        action_gradient(*gamma.model_at(s_mid), gamma.j, mid);
    worst = std::max(worst, l2r_norm(deriv - g));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// explorer

namespace {

Eigen::MatrixXd filter_modes(const Eigen::MatrixXd& samples, int mode_cap,
                             double* removed_energy) {
  Eigen::MatrixXcd modes = fft_rows(samples);
  double removed = 0.0;
  for (int k = mode_cap + 1; k < modes.cols(); ++k) {
    const double c = (k == modes.cols() - 1) ? 1.0 : 2.0;
    removed += c * modes.col(k).squaredNorm();
    modes.col(k).setZero();
  }
  if (removed_energy) *removed_energy = std::sqrt(removed);
  return ifft_rows(modes, static_cast<int>(samples.cols()));
}

}  // namespace

ExploreResult integrate_explore(const HomotopySpec& gamma,
                                const LoopMultiplier& u0, double s_begin,
                                double s_end, int mode_cap,
                                const ExploreOptions& opts) {
  if (2 * mode_cap > u0.loop.n_samples())
    throw std::invalid_argument("mode_cap must be at most N/2");
  ExploreResult out;
  std::vector<double> s_values;
  std::vector<LoopMultiplier> states;

  LoopMultiplier u = u0;
  double s = s_begin;
  s_values.push_back(s);
  states.push_back(u);

  auto rhs = [&](const LoopMultiplier& w, double at_s) {
    return action_gradient(*gamma.model_at(at_s), gamma.j, w);
  };

  int steps = 0;
  while (s < s_end && steps < opts.max_steps) {
    ++steps;
    const TangentVector g = rhs(u, s);
    const double gn = l2r_norm(g);
    double dt = std::min(opts.max_dt, opts.target_step / (gn + 1e-12));
    // stretch the last step instead of leaving a sliver node behind
    if (s + 1.5 * dt >= s_end) dt = s_end - s;

    auto advance = [&](const TangentVector& k, double factor) {
      return LoopMultiplier{
          Loop(u.loop.half_dim(),
               Eigen::MatrixXd(u.loop.samples() + factor * k.xi)),
          u.eta + factor * k.sigma};
    };
    const TangentVector k1 = g;
    const TangentVector k2 = rhs(advance(k1, 0.5 * dt), s + 0.5 * dt);
    const TangentVector k3 = rhs(advance(k2, 0.5 * dt), s + 0.5 * dt);
    const TangentVector k4 = rhs(advance(k3, dt), s + dt);

    Eigen::MatrixXd v = u.loop.samples() +
                        (dt / 6.0) * (k1.xi + 2 * k2.xi + 2 * k3.xi + k4.xi);
    const double eta = u.eta + (dt / 6.0) * (k1.sigma + 2 * k2.sigma +
                                             2 * k3.sigma + k4.sigma);
    double removed = 0.0;
    v = filter_modes(v, mode_cap, &removed);
    out.truncated_tail_energy = std::max(out.truncated_tail_energy, removed);

    u = {Loop(u.loop.half_dim(), std::move(v)), eta};
    s += dt;
    if (steps % opts.record_every == 0 || s >= s_end) {
      s_values.push_back(s);
      states.push_back(u);
    }
    if (u.loop.linf_norm() > opts.ceiling || std::abs(eta) > opts.ceiling) {
      out.aborted = true;
      out.message = "blow-up abort: state exceeded the ceiling";
      break;
    }
  }

  FloerTrajectory& traj = out.trajectory;
  traj.states = std::move(states);
  traj.s_grid.resize(static_cast<int>(s_values.size()));
  for (size_t i = 0; i < s_values.size(); ++i)
    traj.s_grid(static_cast<int>(i)) = s_values[i];
  traj.stencil_order = 2;
  fill_trajectory_diagnostics(traj, gamma);
  return out;
}

// ---------------------------------------------------------------------------
// global least-squares solver

namespace {

// Frozen per-node linearization data for Jacobian applications.
struct NodeLin {
  Eigen::MatrixXd xh;     // X^H(v_j) columns
  Eigen::MatrixXd gradh;  // grad H(v_j) columns
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>> hess;
  double eta = 0.0;
};

struct ResidualVec {
  PathVec nodes;
  TangentVector lo, hi;
};

double res_dot(const ResidualVec& a, const ResidualVec& b) {
  return path_dot(a.nodes, b.nodes) + l2r_inner(a.lo, b.lo) +
         l2r_inner(a.hi, b.hi);
}

// Per-mode preconditioner in the complex-pair representation, where the
// frozen v-block of the Floer operator acts on mode k as
// d/ds - (2 pi k - eta(s) hscale(s)). Each mode stream gets the normal
// matrix of its own banded 1-D system, factored once per outer iteration.
class ModePreconditioner {
 public:
  void build(const std::vector<Stencil>& stencils, int m, int n_samples,
             double mu, double w_end, const Eigen::VectorXd& eta_shift) {
    m_ = m;
    n_ = n_samples;
    Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      const auto& st = stencils[static_cast<size_t>(i)];
      for (size_t t = 0; t < st.offsets.size(); ++t)
        ds(i, i + st.offsets[t]) += st.coeffs[t];
    }
    factors_.clear();
    factors_.reserve(static_cast<size_t>(n_));
    for (int k = 0; k < n_; ++k) {
      Eigen::MatrixXd sk = ds;
      const double freq = 2.0 * M_PI * signed_mode(k, n_);
      for (int i = 0; i < m; ++i) sk(i, i) -= freq - eta_shift(i);
      Eigen::MatrixXd mk = sk.transpose() * sk;
      mk.diagonal().array() += mu + 1e-12;
      mk(0, 0) += w_end * w_end;
      mk(m - 1, m - 1) += w_end * w_end;
      factors_.emplace_back(mk.llt());
    }
    Eigen::MatrixXd ms = ds.transpose() * ds;
    ms.diagonal().array() += mu + 1e-12;
    ms(0, 0) += w_end * w_end;
    ms(m - 1, m - 1) += w_end * w_end;
    sigma_factor_ = ms.llt();
  }

  PathVec apply(const PathVec& x) const {
    const int m = m_;
    const int d = static_cast<int>(x[0].xi.rows());
    const int pairs = d / 2;
    // mode streams: complex-pair FFT per node, one solve per wrapped mode
    std::vector<Eigen::MatrixXcd> modes(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
      modes[static_cast<size_t>(i)] = fft_pairs(x[static_cast<size_t>(i)].xi);

    PathVec out = path_zero(m, d, n_);
    Eigen::MatrixXd rhs(m, 2 * pairs);
    for (int k = 0; k < n_; ++k) {
      for (int i = 0; i < m; ++i)
        for (int b = 0; b < pairs; ++b) {
          rhs(i, 2 * b) = modes[static_cast<size_t>(i)](b, k).real();
          rhs(i, 2 * b + 1) = modes[static_cast<size_t>(i)](b, k).imag();
        }
      const Eigen::MatrixXd sol = factors_[static_cast<size_t>(k)].solve(rhs);
      for (int i = 0; i < m; ++i)
        for (int b = 0; b < pairs; ++b)
          modes[static_cast<size_t>(i)](b, k) =
              std::complex<double>(sol(i, 2 * b), sol(i, 2 * b + 1));
    }
    Eigen::VectorXd sig(m);
    for (int i = 0; i < m; ++i) sig(i) = x[static_cast<size_t>(i)].sigma;
    const Eigen::VectorXd sig_sol = sigma_factor_.solve(sig);
    for (int i = 0; i < m; ++i) {
      out[static_cast<size_t>(i)].xi =
          ifft_pairs(modes[static_cast<size_t>(i)]);
      out[static_cast<size_t>(i)].sigma = sig_sol(i);
    }
    return out;
  }

 private:
  int m_ = 0, n_ = 0;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  Eigen::LLT<Eigen::MatrixXd> sigma_factor_;
};

class BvpWorkspace {
 public:
  BvpWorkspace(const HomotopySpec& gamma, const SolveBvpOptions& opts,
               int half_dim, int n_samples)
      : gamma_(gamma),
        opts_(opts),
        half_dim_(half_dim),
        dim_(2 * half_dim),
        n_(n_samples),
        m_(opts.nodes),
        h_(2.0 * opts.s_span / (opts.nodes - 1)),
        w_end_(opts.endpoint_weight),
        stencils_(build_stencils(opts.nodes, h_, opts.stencil_order)) {
    s_grid_.resize(m_);
    for (int i = 0; i < m_; ++i) s_grid_(i) = -opts.s_span + i * h_;
    models_.reserve(static_cast<size_t>(m_));
    for (int i = 0; i < m_; ++i) models_.push_back(gamma.model_at(s_grid_(i)));
  }

  const Eigen::VectorXd& s_grid() const { return s_grid_; }
  double step() const { return h_; }
  const std::vector<Stencil>& stencils() const { return stencils_; }
  const HamiltonianPtr& model(int i) const {
    return models_[static_cast<size_t>(i)];
  }

  // residual of the discrete Floer system plus endpoint penalties
  ResidualVec residual(const std::vector<LoopMultiplier>& u,
                       const LoopMultiplier& target_lo,
                       const LoopMultiplier& target_hi) const {
    ResidualVec r;
    r.nodes = path_zero(m_, dim_, n_);
    for (int i = 0; i < m_; ++i) {
      auto& ri = r.nodes[static_cast<size_t>(i)];
      const auto& st = stencils_[static_cast<size_t>(i)];
      for (size_t t = 0; t < st.offsets.size(); ++t) {
        const auto& w = u[static_cast<size_t>(i + st.offsets[t])];
        ri.xi.noalias() += st.coeffs[t] * w.loop.samples();
        ri.sigma += st.coeffs[t] * w.eta;
      }
      const TangentVector g =
          action_gradient(*models_[static_cast<size_t>(i)], gamma_.j,
                          u[static_cast<size_t>(i)]);
      ri.xi.noalias() -= g.xi;
      ri.sigma -= g.sigma;
    }
    const double w = w_end_;
    r.lo = {w * (u.front().loop.samples() - target_lo.loop.samples()),
            w * (u.front().eta - target_lo.eta)};
    r.hi = {w * (u.back().loop.samples() - target_hi.loop.samples()),
            w * (u.back().eta - target_hi.eta)};
    return r;
  }

  void freeze_linearization(const std::vector<LoopMultiplier>& u) {
    lin_.assign(static_cast<size_t>(m_), NodeLin{});
    for (int i = 0; i < m_; ++i) {
      auto& nl = lin_[static_cast<size_t>(i)];
      const auto& h = *models_[static_cast<size_t>(i)];
      const auto& ui = u[static_cast<size_t>(i)];
      nl.eta = ui.eta;
      nl.xh.resize(dim_, n_);
      nl.gradh.resize(dim_, n_);
      nl.hess.resize(static_cast<size_t>(n_));
      for (int j = 0; j < n_; ++j) {
        const Eigen::VectorXd x = ui.loop.samples().col(j);
        nl.gradh.col(j) = h.gradient(x);
        nl.xh.col(j) = apply_j0(nl.gradh.col(j));
        nl.hess[static_cast<size_t>(j)] = h.hessian(x);
      }
    }
  }

  // frozen Hessian of the action at node i applied to w (self-adjoint)
  TangentVector hess_at(int i, const TangentVector& w) const {
    const NodeLin& nl = lin_[static_cast<size_t>(i)];
    TangentVector out = TangentVector::zero(dim_, n_);
    out.xi = spectral_derivative_rows(w.xi);
    out.xi.noalias() -= w.sigma * nl.xh;
    out.xi = -apply_j0_cols(out.xi);
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) {
      out.xi.col(j).noalias() -=
          nl.eta * (nl.hess[static_cast<size_t>(j)] * w.xi.col(j));
      acc += nl.gradh.col(j).dot(w.xi.col(j));
    }
    out.sigma = -acc / n_;
    return out;
  }

  ResidualVec apply_j(const PathVec& x) const {
    ResidualVec y;
    y.nodes = path_zero(m_, dim_, n_);
    for (int i = 0; i < m_; ++i) {
      auto& yi = y.nodes[static_cast<size_t>(i)];
      const auto& st = stencils_[static_cast<size_t>(i)];
      for (size_t t = 0; t < st.offsets.size(); ++t) {
        const auto& xx = x[static_cast<size_t>(i + st.offsets[t])];
        yi.xi.noalias() += st.coeffs[t] * xx.xi;
        yi.sigma += st.coeffs[t] * xx.sigma;
      }
      const TangentVector hx = hess_at(i, x[static_cast<size_t>(i)]);
      yi.xi.noalias() -= hx.xi;
      yi.sigma -= hx.sigma;
    }
    const double w = w_end_;
    y.lo = x.front() * w;
    y.hi = x.back() * w;
    return y;
  }

  PathVec apply_jt(const ResidualVec& y) const {
    PathVec x = path_zero(m_, dim_, n_);
    for (int i = 0; i < m_; ++i) {
      const auto& st = stencils_[static_cast<size_t>(i)];
      const auto& yi = y.nodes[static_cast<size_t>(i)];
      for (size_t t = 0; t < st.offsets.size(); ++t) {
        auto& xt = x[static_cast<size_t>(i + st.offsets[t])];
        xt.xi.noalias() += st.coeffs[t] * yi.xi;
        xt.sigma += st.coeffs[t] * yi.sigma;
      }
      const TangentVector hy = hess_at(i, yi);
      x[static_cast<size_t>(i)].xi.noalias() -= hy.xi;
      x[static_cast<size_t>(i)].sigma -= hy.sigma;
    }
    const double w = w_end_;
    x.front().xi.noalias() += w * y.lo.xi;
    x.front().sigma += w * y.lo.sigma;
    x.back().xi.noalias() += w * y.hi.xi;
    x.back().sigma += w * y.hi.sigma;
    return x;
  }

  // normal operator (J^T J + mu I) x
  PathVec apply_normal(const PathVec& x, double mu) const {
    PathVec out = apply_jt(apply_j(x));
    path_axpy(out, mu, x);
    return out;
  }

  // eta(s) times the mean Hessian scale, feeding the mode preconditioner
  Eigen::VectorXd eta_shift(const std::vector<LoopMultiplier>& u) const {
    Eigen::VectorXd shift(m_);
    for (int i = 0; i < m_; ++i) {
      const auto& ui = u[static_cast<size_t>(i)];
      const double hscale =
          models_[static_cast<size_t>(i)]->hessian(ui.loop.mean()).trace() /
          dim_;
      shift(i) = ui.eta * hscale;
    }
    return shift;
  }

  int nodes() const { return m_; }
  int dim() const { return dim_; }
  int n_samples() const { return n_; }
  double endpoint_weight() const { return w_end_; }
  void set_endpoint_weight(double w) { w_end_ = w; }

 private:
  const HomotopySpec& gamma_;
  const SolveBvpOptions& opts_;
  int half_dim_, dim_, n_, m_;
  double h_;
  double w_end_;
  std::vector<Stencil> stencils_;
  Eigen::VectorXd s_grid_;
  std::vector<HamiltonianPtr> models_;
  std::vector<NodeLin> lin_;
};

// continuous phase alignment of an orbit representative against a state
Loop phase_aligned(const Loop& rep, const Loop& target) {
  const Eigen::MatrixXcd cm = rep.modes();
  const Eigen::MatrixXcd um = target.modes();
  const int nk = static_cast<int>(cm.cols());
  // correlation g(phi) = sum_k c_k Re(rho_k e^{2 pi i k phi})
  Eigen::VectorXcd rho(nk);
  for (int k = 0; k < nk; ++k) {
    std::complex<double> acc = 0.0;
    for (int r = 0; r < cm.rows(); ++r)
      acc += um(r, k) * std::conj(cm(r, k));
    rho(k) = acc * ((k == 0 || k == nk - 1) ? 1.0 : 2.0);
  }
  auto corr = [&](double phi) {
    double g = 0.0;
    for (int k = 0; k < nk; ++k) {
      const std::complex<double> rot(std::cos(2 * M_PI * k * phi),
                                     std::sin(2 * M_PI * k * phi));
      g += (rho(k) * rot).real();
    }
    return g;
  };
  double best_phi = 0.0, best = corr(0.0);
  const int scan = 512;
  for (int i = 1; i < scan; ++i) {
    const double phi = static_cast<double>(i) / scan;
    const double g = corr(phi);
    if (g > best) {
      best = g;
      best_phi = phi;
    }
  }
  // golden-section refinement around the best grid value
  double a = best_phi - 1.0 / scan, b = best_phi + 1.0 / scan;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 60; ++it) {
    if (corr(c) > corr(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  const double phi = 0.5 * (a + b);

  Eigen::MatrixXcd shifted = cm;
  for (int k = 0; k < nk; ++k)
    shifted.col(k) *= std::complex<double>(std::cos(2 * M_PI * k * phi),
                                           std::sin(2 * M_PI * k * phi));
  return Loop(rep.half_dim(), ifft_rows(shifted, rep.n_samples()));
}

LoopMultiplier endpoint_target(const EndpointSpec& spec,
                               const HamiltonianPtr& model,
                               const LoopMultiplier& current) {
  if (spec.type == EndpointSpec::Type::sigma_component) {
    if (auto tc = project(*model, current))
      return {Loop::constant(tc->base, current.loop.n_samples()), 0.0};
    const Eigen::VectorXd vbar =
        closest_point_on_sigma(*model, current.loop.mean());
    return {Loop::constant(vbar, current.loop.n_samples()), 0.0};
  }
  const Loop aligned =
      phase_aligned(spec.component.representative.loop, current.loop);
  return {aligned, spec.component.representative.eta};
}

int pcg_solve(const BvpWorkspace& ws, const ModePreconditioner& pre,
              const PathVec& rhs, double mu, int max_iter, double tol,
              PathVec& x) {
  const int m = ws.nodes();
  x = path_zero(m, ws.dim(), ws.n_samples());
  PathVec r = rhs;  // residual of the normal system at x = 0
  PathVec z = pre.apply(r);
  PathVec p = z;
  double rz = path_dot(r, z);
  const double rhs_norm = std::sqrt(path_dot(rhs, rhs));
  if (rhs_norm == 0.0) return 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const PathVec ap = ws.apply_normal(p, mu);
    const double pap = path_dot(p, ap);
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    path_axpy(x, alpha, p);
    path_axpy(r, -alpha, ap);
    if (std::sqrt(path_dot(r, r)) < tol * rhs_norm) break;
    const PathVec z_new = pre.apply(r);
    const double rz_new = path_dot(r, z_new);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < p.size(); ++i) {
      p[i].xi = z_new[i].xi + beta * p[i].xi;
      p[i].sigma = z_new[i].sigma + beta * p[i].sigma;
    }
  }
  return it;
}

std::vector<LoopMultiplier> path_plus(const std::vector<LoopMultiplier>& u,
                                      const PathVec& d, double alpha,
                                      int half_dim) {
  std::vector<LoopMultiplier> out;
  out.reserve(u.size());
  for (size_t i = 0; i < u.size(); ++i)
    out.push_back({Loop(half_dim,
                        Eigen::MatrixXd(u[i].loop.samples() + alpha * d[i].xi)),
                   u[i].eta + alpha * d[i].sigma});
  return out;
}

}  // namespace

BvpResult solve_bvp(const HomotopySpec& gamma, const EndpointSpec& lo,
                    const EndpointSpec& hi, const SolveBvpOptions& opts) {
  if (!gamma.j.is_standard())
    throw std::invalid_argument("solve_bvp works in the standard J0 chart");
  BvpResult out;

  const LoopMultiplier& rep_lo = lo.component.representative;
  const LoopMultiplier& rep_hi = hi.component.representative;
  const int half_dim = rep_lo.loop.half_dim();
  const int n = rep_lo.loop.n_samples();
  const int m = opts.nodes;
  if (rep_hi.loop.n_samples() != n)
    throw std::invalid_argument("endpoint grids disagree");

  BvpWorkspace ws(gamma, opts, half_dim, n);

  // initial path: caller-provided or a smoothstep interpolation of the
  // endpoint representatives
  std::vector<LoopMultiplier> u;
  if (opts.initial_path) {
    u = *opts.initial_path;
    if (static_cast<int>(u.size()) != m)
      throw std::invalid_argument("initial path node count mismatch");
  } else {
    u.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      const double w =
          HomotopySpec::beta((ws.s_grid()(i) + opts.s_span) /
                             (2.0 * opts.s_span));
      Eigen::MatrixXd s = (1.0 - w) * rep_lo.loop.samples() +
                          w * rep_hi.loop.samples();
      u.push_back({Loop(half_dim, std::move(s)),
                   (1.0 - w) * rep_lo.eta + w * rep_hi.eta});
    }
  }

  LoopMultiplier target_lo = endpoint_target(lo, ws.model(0), u.front());
  LoopMultiplier target_hi = endpoint_target(hi, ws.model(m - 1), u.back());

  auto max_node_residual = [&](const ResidualVec& r) {
    double mx = 0.0;
    for (const auto& t : r.nodes) mx = std::max(mx, l2r_norm(t));
    return mx;
  };

  ResidualVec r = ws.residual(u, target_lo, target_hi);
  double obj = res_dot(r, r);
  double mu = 1e-4;
  double best_node_res = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  ModePreconditioner pre;

  // Polak-Ribiere warmup on the true objective with the mode preconditioner
  // as the metric; cheap and tolerant of poor initial paths.
  if (opts.ncg_warmup > 0) {
    pre.build(ws.stencils(), m, n, 1e-6, ws.endpoint_weight(), ws.eta_shift(u));
    PathVec dir, z_prev;
    double gz_prev = 0.0;
    for (int it = 0; it < opts.ncg_warmup; ++it) {
      ws.freeze_linearization(u);
      PathVec g = ws.apply_jt(r);  // half the objective gradient
      PathVec z = pre.apply(g);
      const double gz = path_dot(g, z);
      if (gz <= 0.0 || !std::isfinite(gz)) break;
      if (it == 0) {
        dir = z;
        for (auto& t : dir) {
          t.xi = -t.xi;
          t.sigma = -t.sigma;
        }
      } else {
        double beta_pr =
            (gz - path_dot(g, z_prev)) / std::max(gz_prev, 1e-300);
        beta_pr = std::max(0.0, beta_pr);
        for (size_t i = 0; i < dir.size(); ++i) {
          dir[i].xi = -z[i].xi + beta_pr * dir[i].xi;
          dir[i].sigma = -z[i].sigma + beta_pr * dir[i].sigma;
        }
      }
      z_prev = z;
      gz_prev = gz;
      // exact step for the linearized model, then backtrack on the objective
      const ResidualVec jd = ws.apply_j(dir);
      const double denom = res_dot(jd, jd);
      if (denom <= 0.0) break;
      double alpha = -path_dot(g, dir) / denom;
      if (!(alpha > 0.0)) {
        dir = z;
        for (auto& t : dir) {
          t.xi = -t.xi;
          t.sigma = -t.sigma;
        }
        alpha = gz / denom;
      }
      bool accepted = false;
      for (int bt = 0; bt < 10; ++bt) {
        std::vector<LoopMultiplier> trial = path_plus(u, dir, alpha, half_dim);
        const ResidualVec rt = ws.residual(trial, target_lo, target_hi);
        const double obj_t = res_dot(rt, rt);
        if (obj_t < obj) {
          u = std::move(trial);
          r = rt;
          obj = obj_t;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      if (it % 8 == 7) {
        target_lo = endpoint_target(lo, ws.model(0), u.front());
        target_hi = endpoint_target(hi, ws.model(m - 1), u.back());
        r = ws.residual(u, target_lo, target_hi);
        obj = res_dot(r, r);
      }
    }
  }

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    out.outer_iterations = outer;
    const double node_res = max_node_residual(r);
    if (opts.verbose)
      std::printf("[bvp] outer=%d node_res=%.3e obj=%.6e mu=%.2e w=%.2e\n",
                  outer, node_res, obj, mu, ws.endpoint_weight());
    if (node_res < opts.residual_tol) {
      out.converged = true;
      break;
    }

    ws.freeze_linearization(u);
    pre.build(ws.stencils(), m, n, mu, ws.endpoint_weight(), ws.eta_shift(u));

    PathVec rhs = ws.apply_jt(r);
    for (auto& t : rhs) {
      t.xi = -t.xi;
      t.sigma = -t.sigma;
    }
    PathVec d;
    const int pcg_iters =
        pcg_solve(ws, pre, rhs, mu, opts.max_inner, opts.inner_tol, d);
    if (opts.verbose)
      std::printf("[bvp]   |J*r|=%.3e pcg_iters=%d |d|=%.3e\n",
                  std::sqrt(path_dot(rhs, rhs)), pcg_iters,
                  std::sqrt(path_dot(d, d)));

    // backtracking on the true objective
    bool accepted = false;
    double alpha = 1.0;
    for (int bt = 0; bt < 12; ++bt) {
      std::vector<LoopMultiplier> trial = path_plus(u, d, alpha, half_dim);
      const ResidualVec rt = ws.residual(trial, target_lo, target_hi);
      const double obj_t = res_dot(rt, rt);
      if (obj_t < obj) {
        u = std::move(trial);
        r = rt;
        obj = obj_t;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (accepted) {
      mu = std::max(1e-12, mu * (alpha == 1.0 ? 0.3 : 0.8));
      // soften the anchoring so the equation rows dominate at convergence,
      // and refresh the lagged endpoint targets
      ws.set_endpoint_weight(std::max(opts.endpoint_weight_final,
                                      0.35 * ws.endpoint_weight()));
      target_lo = endpoint_target(lo, ws.model(0), u.front());
      target_hi = endpoint_target(hi, ws.model(m - 1), u.back());
      r = ws.residual(u, target_lo, target_hi);
      obj = res_dot(r, r);
    } else {
      mu *= 10.0;
      if (mu > 1e6) {
        out.message = "no descent direction at the least-squares optimum";
        break;
      }
    }
    const double node_res_now = max_node_residual(r);
    if (node_res_now < best_node_res * (1.0 - 1e-3)) {
      best_node_res = node_res_now;
      stagnant = 0;
    } else if (++stagnant >= 6) {
      out.message = "stalled at the least-squares optimum";
      break;
    }
  }
  if (!out.converged) {
    // the loop may have exited before re-testing the node residual
    double node_res = 0.0;
    for (const auto& t : r.nodes) node_res = std::max(node_res, l2r_norm(t));
    out.converged = node_res < opts.residual_tol;
  }

  if (!out.converged)
    out.message = out.message.empty()
                      ? "residual tolerance not reached within max_outer"
                      : out.message;

  FloerTrajectory& traj = out.trajectory;
  traj.s_grid = ws.s_grid();
  traj.states = std::move(u);
  traj.stencil_order = opts.stencil_order;
  fill_trajectory_diagnostics(traj, gamma);
  traj.endpoint_gap_lo = l2r_distance(traj.states.front(), target_lo);
  traj.endpoint_gap_hi = l2r_distance(traj.states.back(), target_hi);
  return out;
}

HomotopyCondition homotopy_condition(const HomotopySpec& gamma, double c_tilde,
                                     double eps0) {
  HomotopyCondition out;
  const double jinf = gamma.j.norm_inf();
  out.lhs = (c_tilde + std::pow(jinf, 1.5) / eps0) * gamma.ds_h_inf();
  out.ok = out.lhs < 0.125;
  return out;
}

std::pair<double, double> novikov_window(double a, double b) {
  if (a > b) throw std::invalid_argument("novikov_window needs a <= b");
  return {std::min(2.0 * a, -1.0), std::max(2.0 * b, 1.0)};
}

}  // namespace rabi
