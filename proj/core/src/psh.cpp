#include "rabi/psh.hpp"

#include <cmath>
#include <queue>

#include "rabi/fourier.hpp"
#include "rabi/ledger.hpp"

namespace rabi {

F12 f1_f2(const HamiltonianModel& h, const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = h.gradient(x);
  const Eigen::MatrixXd hess = h.hessian(x);
  const Eigen::VectorXd grad_f = 0.5 * x;
  const Eigen::VectorXd xh = apply_j0(grad);

  // grad(dF(X^H)) = HessF(J grad H) - HessH(J grad F)
  const Eigen::VectorXd g_df = 0.5 * xh - hess * apply_j0(grad_f);
  // grad(dcF(X^H)) = grad f2 = -(HessF(grad H) + HessH(grad F))
  const Eigen::VectorXd g_f2 = -(0.5 * grad + hess * grad_f);

  F12 out;
  out.f2 = -grad.dot(grad_f);
  out.f1 = g_df.dot(xh) - grad.squaredNorm() - g_f2.squaredNorm() -
           g_df.squaredNorm();
  return out;
}

Eigen::VectorXd grad_f1_fd(const HamiltonianModel& h, const Eigen::VectorXd& x,
                           double eps) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    g(i) = (f1_f2(h, xp).f1 - f1_f2(h, xm).f1) / (2 * eps);
  }
  return g;
}

Eigen::VectorXd grad_f2_fd(const HamiltonianModel& h, const Eigen::VectorXd& x,
                           double eps) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    g(i) = (f1_f2(h, xp).f2 - f1_f2(h, xm).f2) / (2 * eps);
  }
  return g;
}

AlphaConstants alpha_constants(const AdmissibilityCertificate& cert) {
  const double m = cert.M, h1 = cert.h1, l = cert.L;
  AlphaConstants a;
  a.a1 = std::pow(std::max(2.0 * m, (2.0 / 3.0) * h1), 2);
  a.a2 = 0.5 * std::max(m, h1 * h1 / (4.0 * m));
  a.a3 = std::max(m * (8.0 * m + 2.5 * l), 0.5 * h1 * (7.0 * m + 3.0 * l));
  a.a4 = std::max(m, 0.5 * h1);
  return a;
}

namespace {

struct GridFields {
  Eigen::MatrixXd f_of_v;    // m x N
  Eigen::MatrixXd lap;       // 5-point laplacian, defined on interior rows
  Eigen::MatrixXd lap_ref;   // spectral-t + 4th-order-s laplacian
  Eigen::MatrixXd f_field;   // eta^2 f1 + d_s eta f2
  Eigen::MatrixXd f1_field, f2_field;
};

GridFields build_fields(const FloerTrajectory& traj, const HomotopySpec& gamma) {
  const int m = traj.nodes();
  const int n = traj.states[0].loop.n_samples();
  const double hs = traj.step();
  const double ht = 1.0 / n;

  GridFields g;
  g.f_of_v.resize(m, n);
  g.f_field.resize(m, n);
  g.f1_field.resize(m, n);
  g.f2_field.resize(m, n);
  for (int i = 0; i < m; ++i) {
    const auto model = gamma.model_at(traj.s_grid(i));
    const auto& u = traj.states[static_cast<size_t>(i)];
    // the flow value of d_s eta, free of differencing noise
    const double ds_eta = -model->mean_value(u.loop);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd x = u.loop.samples().col(j);
      g.f_of_v(i, j) = 0.25 * x.squaredNorm();
      const F12 f = f1_f2(*model, x);
      g.f1_field(i, j) = f.f1;
      g.f2_field(i, j) = f.f2;
      g.f_field(i, j) = u.eta * u.eta * f.f1 + ds_eta * f.f2;
    }
  }

  g.lap = Eigen::MatrixXd::Zero(m, n);
  g.lap_ref = Eigen::MatrixXd::Zero(m, n);
  // spectral second derivative in t, per s-row
  Eigen::MatrixXd dtt =
      spectral_second_derivative_rows(g.f_of_v);  // rows are s-nodes? no:
  // spectral_*_rows differentiates along columns of each row; here each row
  // of f_of_v is one s-node's t-signal, which is what we want.
  for (int i = 1; i + 1 < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const int jm = (j - 1 + n) % n, jp = (j + 1) % n;
      const double d2t =
          (g.f_of_v(i, jp) - 2.0 * g.f_of_v(i, j) + g.f_of_v(i, jm)) /
          (ht * ht);
      const double d2s =
          (g.f_of_v(i + 1, j) - 2.0 * g.f_of_v(i, j) + g.f_of_v(i - 1, j)) /
          (hs * hs);
      g.lap(i, j) = d2s + d2t;
      double d2s4 = d2s;
      if (i >= 2 && i + 2 < m) {
        d2s4 = (-g.f_of_v(i + 2, j) + 16.0 * g.f_of_v(i + 1, j) -
                30.0 * g.f_of_v(i, j) + 16.0 * g.f_of_v(i - 1, j) -
                g.f_of_v(i - 2, j)) /
               (12.0 * hs * hs);
      }
      g.lap_ref(i, j) = d2s4 + dtt(i, j);
    }
  }
  return g;
}

}  // namespace

EllipticAudit elliptic_audit(const FloerTrajectory& traj,
                             const HomotopySpec& gamma, double k_inf_radius,
                             const BoundLedger& ledger,
                             const EllipticAuditOptions& opts) {
  EllipticAudit out;
  out.k_inf_radius = k_inf_radius;
  const int m = traj.nodes();
  const int n = traj.states[0].loop.n_samples();
  const double hs = traj.step();
  const double ht = 1.0 / n;

  const GridFields g = build_fields(traj, gamma);

  // patch labelling: nodes with |v| > radius, 4-connectivity, t wraps
  Eigen::MatrixXi label = Eigen::MatrixXi::Constant(m, n, -1);
  auto in_omega = [&](int i, int j) {
    return traj.states[static_cast<size_t>(i)].loop.samples().col(j).norm() >
           k_inf_radius;
  };
  int next_label = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      if (label(i, j) >= 0 || !in_omega(i, j)) continue;
      std::queue<std::pair<int, int>> bfs;
      bfs.push({i, j});
      label(i, j) = next_label;
      while (!bfs.empty()) {
        auto [ci, cj] = bfs.front();
        bfs.pop();
        const int nb[4][2] = {{ci - 1, cj},
                              {ci + 1, cj},
                              {ci, (cj - 1 + n) % n},
                              {ci, (cj + 1) % n}};
        for (const auto& q : nb) {
          if (q[0] < 0 || q[0] >= m) continue;
          if (label(q[0], q[1]) >= 0 || !in_omega(q[0], q[1])) continue;
          label(q[0], q[1]) = next_label;
          bfs.push({q[0], q[1]});
        }
      }
      ++next_label;
    }

  // measured discretization tolerance unless pinned by the caller
  double tol = opts.tol_disc;
  if (tol < 0.0) {
    double worst = 0.0;
    for (int i = 1; i + 1 < m; ++i)
      for (int j = 0; j < n; ++j)
        if (label(i, j) >= 0)
          worst = std::max(worst, std::abs(g.lap(i, j) - g.lap_ref(i, j)));
    tol = worst + 1e-12;
  }
  out.tol_disc = tol;

  out.patches.resize(static_cast<size_t>(next_label));
  for (int p = 0; p < next_label; ++p) {
    auto& rep = out.patches[static_cast<size_t>(p)];
    rep.id = p;
    rep.s_min = traj.s_grid(m - 1);
    rep.s_max = traj.s_grid(0);
  }

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const int p = label(i, j);
      if (p < 0) continue;
      auto& rep = out.patches[static_cast<size_t>(p)];
      ++rep.node_count;
      rep.s_min = std::min(rep.s_min, traj.s_grid(i));
      rep.s_max = std::max(rep.s_max, traj.s_grid(i));
      const bool interior = i >= 1 && i + 1 < m &&
                            label(i - 1, j) == p && label(i + 1, j) == p &&
                            label(i, (j - 1 + n) % n) == p &&
                            label(i, (j + 1) % n) == p;
      rep.f_l1 += std::abs(g.f_field(i, j)) * hs * ht;
      // one-sided-safe derivative magnitudes of f inside the patch
      const int jp = (j + 1) % n, jm = (j - 1 + n) % n;
      if (label(i, jp) == p && label(i, jm) == p)
        rep.ft_l1 += std::abs(g.f_field(i, jp) - g.f_field(i, jm)) /
                     (2.0 * ht) * hs * ht;
      if (i >= 1 && i + 1 < m && label(i - 1, j) == p && label(i + 1, j) == p)
        rep.fs_l1 += std::abs(g.f_field(i + 1, j) - g.f_field(i - 1, j)) /
                     (2.0 * hs) * hs * ht;
      if (interior) {
        ++rep.interior_count;
        rep.sup_interior = std::max(rep.sup_interior, g.f_of_v(i, j));
        const double defect = g.f_field(i, j) - g.lap(i, j);
        rep.worst_defect = std::max(rep.worst_defect, defect);
        if (defect > tol) rep.inequality_ok = false;
      } else {
        rep.sup_boundary = std::max(rep.sup_boundary, g.f_of_v(i, j));
      }
    }

  // budgets from the proof chain, with the supplied global L2 bound
  const double e = ledger.frak_e, y = ledger.frak_y, eps = ledger.eps;
  const double v = opts.v_bound > 0.0 ? opts.v_bound : ledger.v4;
  const double mm = ledger.cert.M, h1 = ledger.cert.h1;
  const double a1 = ledger.alpha1, a2 = ledger.alpha2, a3 = ledger.alpha3,
               a4 = ledger.alpha4;
  for (auto& rep : out.patches) {
    rep.f_l1_budget = (e / eps) * (v + 1) * (v + 1) * (a1 * y * y / eps + a2);
    rep.ft_l1_budget =
        e * (v + 1) * (a3 * y * y / eps + a4) * (1.0 + (y / eps) * (mm * v + h1));
    rep.fs_l1_budget =
        e * (v + 1) *
        ((1.0 / eps) * (v + 1) * (2.0 * a1 * y + a2 * (mm * v + h1)) +
         a3 * y * y / eps + a4);
    rep.budget_ok = rep.f_l1 <= rep.f_l1_budget &&
                    rep.ft_l1 <= rep.ft_l1_budget &&
                    rep.fs_l1 <= rep.fs_l1_budget;
    rep.dwell = rep.s_max - rep.s_min;
    rep.dwell_bound = e / (eps * eps);
    rep.dwell_ok = rep.dwell <= rep.dwell_bound;
    if (!rep.inequality_ok)
      rep.finding = "elliptic inequality violated at an interior node";
    else if (!rep.budget_ok)
      rep.finding = "W11 budget exceeded";
    else if (!rep.dwell_ok)
      rep.finding = "patch dwell exceeds the out-of-B time budget";
    if (!rep.inequality_ok || !rep.budget_ok || !rep.dwell_ok)
      out.pass = false;
  }
  return out;
}

double k_infinity_radius(const std::vector<FloerTrajectory>& batch,
                         const HomotopySpec& gamma, const BoundLedger& ledger,
                         double eps) {
  double radius = std::max(ledger.v_radius, ledger.k_radius);
  for (const auto& traj : batch) {
    for (const auto& u : traj.states) {
      if (!in_b(gamma, u, ledger.frak_a, ledger.frak_y, eps)) continue;
      radius = std::max(radius, u.loop.linf_norm());
    }
  }
  return 1.1 * radius;
}

}  // namespace rabi
