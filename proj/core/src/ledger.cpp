#include "rabi/ledger.hpp"

#include <cmath>
#include <stdexcept>

#include "rabi/psh.hpp"

namespace rabi {
namespace {

// Smallest v >= lo with pred true, assuming pred is monotone (false then
// true); expands the bracket geometrically, then bisects to tol.
double bisect_threshold(double lo, const std::function<bool(double)>& pred,
                        double tol = 1e-10) {
  if (pred(lo)) return lo;
  double hi = std::max(1.0, 2.0 * lo);
  int guard = 0;
  while (!pred(hi)) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("threshold bracket failed");
  }
  while (hi - lo > tol * (1.0 + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // double precision exhausted
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

Eps0Result compute_eps0_ctilde(const AdmissibilityCertificate& cert) {
  if (cert.c2 <= 0.0)
    throw std::invalid_argument("infeasible certificate: c2 must be positive");
  const double c1 = cert.c1, c2 = cert.c2, c3 = cert.c3, c4 = cert.c4,
               c5 = cert.c5, nu = cert.nu, m = cert.M, h1 = cert.h1;
  // pole of both chains; the predicates are monotone beyond it
  const double pole = std::sqrt((2.0 * c3 + c5) / (2.0 * c2));
  auto pred = [&](double v) {
    const double denom = c2 * v * v - c3 - 0.5 * c5;
    if (denom <= 0.0) return false;
    if (1.0 / denom > 2.0 / c5) return false;
    return c1 * c5 * (v + 1.0) / (2.0 * denom) <= c4;
  };
  Eps0Result out;
  out.v0 = bisect_threshold(pole * (1.0 + 1e-14) + 1e-300, pred);
  out.eps0 = std::min(0.5 * c5,
                      0.5 * nu * std::min(1.0, 1.0 / (m * out.v0 + h1)));
  out.c_tilde = std::max(2.0 / c5, c4 * (out.v0 * out.v0 + 1.0));
  return out;
}

AprioriBounds apriori_bounds(double a, double b, double c_tilde, double eps0,
                             double j_norm_inf) {
  if (a > b) throw std::invalid_argument("apriori_bounds needs a <= b");
  AprioriBounds out;
  const double mx = std::max(std::abs(a), std::abs(b));
  const double width = b - a;
  out.frak_y = (8.0 / 7.0) * (c_tilde * (mx + 1.0) +
                              (width / eps0) * std::pow(j_norm_inf, 1.5));
  out.frak_a = (8.0 * mx + 1.0 + std::abs(width)) / 7.0;
  out.frak_e =
      j_norm_inf * (8.0 * std::abs(width) + mx + 1.0) / 7.0;
  return out;
}

Eps1V1 eps1_v1(double delta, double frak_a,
               const AdmissibilityCertificate& cert) {
  if (delta <= 0.0) throw std::invalid_argument("delta must be positive");
  Eps1V1 out;
  const double c1 = cert.c1, c2 = cert.c2, c3 = cert.c3, m = cert.M,
               h1 = cert.h1;
  out.eps1 = 0.5 * delta * std::min(c2 / (2.0 * m * c1), 1.0);
  const double e1 = out.eps1;
  auto fraction = [&](double v) {
    const double denom = c2 * v * v - c3 - e1;
    return denom > 0.0 ? (frak_a + e1 * c1 * (v + 1.0)) / denom : -1.0;
  };
  auto pred = [&](double v) {
    const double f = fraction(v);
    if (f < 0.0) return false;
    if (f > delta) return false;                       // |eta| chain
    return e1 + f * (h1 + m * v) <= delta;             // |d_t v| chain
  };
  const double pole = std::sqrt(std::max(0.0, (c3 + e1) / c2));
  out.v1 = bisect_threshold(pole * (1.0 + 1e-14) + 1e-300, pred);
  return out;
}

double mu_of_delta(double delta, const AdmissibilityCertificate& cert) {
  const double c1 = cert.c1, c2 = cert.c2, c3 = cert.c3, c4 = cert.c4,
               c5 = cert.c5;
  auto g1 = [&](double r) { return (c2 * r * r - c3) / (c1 * (r + 1.0)); };
  auto g2 = [&](double r) { return c5 / (c4 * (r * r + 1.0)); };
  // g1 starts below g2 and overtakes it; the max of the two floors attains
  // its infimum at the crossing
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (g1(hi) < g2(hi)) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("no crossing found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g1(mid) < g2(mid) ? lo : hi) = mid;
    if (hi - lo < 1e-12) break;
  }
  const double floor = g2(0.5 * (lo + hi));
  return std::min(cert.nu, delta * floor);
}

double eps2_threshold(double delta, double j_norm_inf, double frak_a,
                      const AdmissibilityCertificate& cert) {
  const Eps0Result e0 = compute_eps0_ctilde(cert);
  const double e1 = eps1_v1(0.25 * delta, frak_a, cert).eps1;
  const double mu = mu_of_delta(0.25 * delta, cert);
  return std::min({e0.eps0, e1, mu}) / j_norm_inf;
}

double v2_threshold(double delta, double r, double frak_a,
                    const AdmissibilityCertificate& cert) {
  const double v1 = eps1_v1(0.25 * delta, frak_a, cert).v1;
  return std::max(v1, r + 0.25 * delta);
}

BoundLedger compute_ledger(const AdmissibilityCertificate& cert, double a,
                           double b, double j_norm_inf, double ng,
                           double v_radius, double k_radius, double n_radius,
                           double v3, const LedgerOverrides& overrides) {
  BoundLedger led;
  led.cert = cert;
  led.a = a;
  led.b = b;
  led.j_norm_inf = j_norm_inf;
  led.ng = ng;
  led.v_radius = v_radius;
  led.k_radius = k_radius;
  led.n_radius = n_radius;
  led.v3 = v3;
  led.r_kv = std::max(k_radius, v_radius);

  const Eps0Result e0 = compute_eps0_ctilde(cert);
  led.eps0 = e0.eps0;
  led.c_tilde = e0.c_tilde;
  led.v0 = e0.v0;

  const AprioriBounds ab = apriori_bounds(a, b, e0.c_tilde, e0.eps0,
                                          j_norm_inf);
  led.frak_y = ab.frak_y;
  led.frak_a = ab.frak_a;
  led.frak_e = ab.frak_e;

  led.delta0 = cert.inf_grad_sigma / (3.0 * cert.M);
  led.delta = overrides.delta.value_or(
      0.9 * std::min({ng, 1.0 / (6.0 * cert.M), 0.5 * led.delta0}));
  if (led.delta <= 0.0 ||
      led.delta >= std::min(ng, 1.0 / (6.0 * cert.M)))
    throw std::invalid_argument("delta override outside the admissible range");

  const Eps1V1 e1 = eps1_v1(led.delta, led.frak_a, cert);
  led.eps1_delta = e1.eps1;
  led.v1_delta = e1.v1;
  led.mu_delta = mu_of_delta(led.delta, cert);
  led.eps2_half = eps2_threshold(0.5 * led.delta, j_norm_inf, led.frak_a,
                                 cert);
  led.v2_half = v2_threshold(0.5 * led.delta, led.r_kv, led.frak_a, cert);

  // radius past which the H1 growth floor forces |grad H| >= 1/2
  {
    const double c = 0.5 * cert.c1 / cert.c2;
    auto pred = [&](double v) {
      return (cert.c2 / cert.c1) * (v - cert.h1_prime) >= 0.5;
    };
    led.r_grad_floor = bisect_threshold(std::max(0.0, cert.h1_prime), pred);
    (void)c;
  }

  led.v4 = std::max({led.r_grad_floor, led.v3, k_radius, led.v2_half});
  led.eps = overrides.eps.value_or(0.9 * led.eps2_half);
  if (led.eps <= 0.0 || led.eps >= led.eps2_half * (1.0 + 1e-12))
    throw std::invalid_argument("eps override outside (0, eps2)");
  led.k_max = 2.0 * led.frak_e / (led.delta * led.eps) + 1.0;
  led.m_hat = 72.0 * cert.M;

  const AlphaConstants al = alpha_constants(cert);
  led.alpha1 = al.a1;
  led.alpha2 = al.a2;
  led.alpha3 = al.a3;
  led.alpha4 = al.a4;
  return led;
}

bool ledger_reproduces(const BoundLedger& ledger) {
  LedgerOverrides ov;
  ov.delta = ledger.delta;
  ov.eps = ledger.eps;
  const BoundLedger again = compute_ledger(
      ledger.cert, ledger.a, ledger.b, ledger.j_norm_inf, ledger.ng,
      ledger.v_radius, ledger.k_radius, ledger.n_radius, ledger.v3, ov);
  const bool fields_equal =
      again.eps0 == ledger.eps0 && again.c_tilde == ledger.c_tilde &&
      again.v0 == ledger.v0 && again.frak_y == ledger.frak_y &&
      again.frak_a == ledger.frak_a && again.frak_e == ledger.frak_e &&
      again.delta0 == ledger.delta0 && again.delta == ledger.delta &&
      again.eps1_delta == ledger.eps1_delta &&
      again.v1_delta == ledger.v1_delta &&
      again.mu_delta == ledger.mu_delta &&
      again.eps2_half == ledger.eps2_half && again.v2_half == ledger.v2_half &&
      again.v4 == ledger.v4 && again.eps == ledger.eps &&
      again.k_max == ledger.k_max && again.m_hat == ledger.m_hat &&
      again.r_grad_floor == ledger.r_grad_floor &&
      again.alpha1 == ledger.alpha1 && again.alpha2 == ledger.alpha2 &&
      again.alpha3 == ledger.alpha3 && again.alpha4 == ledger.alpha4;
  const bool invariants = ledger.eps0 <= 0.5 * ledger.cert.c5 &&
                          ledger.k_max >= 1.0 &&
                          ledger.delta <
                              std::min(ledger.ng, 1.0 / (6.0 * ledger.cert.M));
  return fields_equal && invariants;
}

// ---------------------------------------------------------------------------

bool in_b(const HomotopySpec& gamma, const LoopMultiplier& u, double frak_a,
          double frak_y, double eps, int homotopy_scan) {
  if (std::abs(u.eta) > frak_y) return false;
  const int count = gamma.constant_homotopy() ? 1 : homotopy_scan;
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const auto h = gamma.model_at(s);
    if (std::abs(action(*h, u)) > frak_a) continue;
    const TangentVector g = action_gradient(*h, gamma.j, u);
    if (l2r_norm(g) <= eps) return true;
  }
  return false;
}

bool in_k0(const HamiltonianModel&, const LoopMultiplier& u,
           const BoundLedger& ledger) {
  return std::abs(u.eta) <= ledger.frak_y &&
         u.loop.l2_norm() <= ledger.v4 + ledger.delta;
}

bool in_n_delta_r(const HamiltonianModel& h, const LoopMultiplier& u,
                  double delta, double r) {
  const auto tc = project(h, u);
  return tc && tc->radius < delta && tc->base.norm() >= r;
}

PartitionResult partition(const HomotopySpec& gamma, const LoopMultiplier& u,
                          const BoundLedger& ledger, double delta) {
  PartitionResult out;
  if (!in_b(gamma, u, ledger.frak_a, ledger.frak_y, ledger.eps)) {
    out.cls = PartitionClass::outside;
    out.note = "state is outside the set of infinitesimal action derivation";
    return out;
  }
  const auto& cert = ledger.cert;
  const double v2 = v2_threshold(delta, ledger.r_kv, ledger.frak_a, cert);
  const double eps2 =
      eps2_threshold(delta, ledger.j_norm_inf, ledger.frak_a, cert);
  const auto h0 = gamma.h_start();
  out.dt_norm = u.loop.derivative().l2_norm();
  if (u.loop.l2_norm() >= v2) {
    out.cls = PartitionClass::u1;
    out.dist_w12 = dist_w12_to_sigma(*h0, u);
    bool far_enough = true;
    for (int j = 0; j < u.loop.n_samples(); ++j)
      far_enough &= u.loop.samples().col(j).norm() >= ledger.r_kv;
    out.bounds_hold = far_enough && out.dist_w12 < delta;
    if (!out.bounds_hold) out.note = "u1 conclusion violated numerically";
  } else {
    out.cls = PartitionClass::k1;
    const double vcap = std::max(v2, ledger.v3);
    const double dt_cap =
        eps2 + ledger.frak_y * (cert.h1 + cert.M * vcap);
    out.bounds_hold = std::abs(u.eta) <= ledger.frak_y &&
                      u.loop.l2_norm() <= vcap && out.dt_norm <= dt_cap;
    if (!out.bounds_hold) out.note = "k1 norm bounds violated numerically";
  }
  return out;
}

OscillationAudit oscillation_audit(const FloerTrajectory& traj,
                                   const HomotopySpec& gamma,
                                   const BoundLedger& ledger, double eps,
                                   double delta) {
  OscillationAudit out;
  const int m = traj.nodes();
  const auto h0 = gamma.h_start();
  std::vector<char> member_b(static_cast<size_t>(m)), member_k0(
                                                          static_cast<size_t>(m)),
      member_n(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& u = traj.states[static_cast<size_t>(i)];
    member_b[static_cast<size_t>(i)] =
        in_b(gamma, u, ledger.frak_a, ledger.frak_y, eps);
    member_k0[static_cast<size_t>(i)] = in_k0(*h0, u, ledger);
    member_n[static_cast<size_t>(i)] =
        in_n_delta_r(*h0, u, delta, ledger.v4);
  }

  const double h = traj.step();
  for (int i = 0; i < m; ++i)
    if (!member_b[static_cast<size_t>(i)]) out.dwell_outside_b += h;

  // the sup/inf recursion evaluated on the grid
  int i1 = -1;
  for (int i = m - 1; i >= 0; --i)
    if (member_k0[static_cast<size_t>(i)]) {
      i1 = i;
      break;
    }
  if (i1 < 0) {
    out.pass = false;
    out.finding = "trajectory never visits the bounded core set";
    return out;
  }
  out.tau.push_back(traj.s_grid(i1));
  out.oscillations = 1;
  int cursor = i1;
  auto outside_kn = [&](int i) {
    return !member_k0[static_cast<size_t>(i)] &&
           !member_n[static_cast<size_t>(i)];
  };
  while (true) {
    int minus = -1;
    for (int i = cursor; i < m; ++i)
      if (outside_kn(i)) {
        minus = i;
        break;
      }
    if (minus < 0) break;
    int plus = -1;
    for (int i = minus; i < m; ++i)
      if (member_b[static_cast<size_t>(i)]) {
        plus = i;
        break;
      }
    if (plus < 0) break;
    out.tau.push_back(traj.s_grid(minus));
    out.tau.push_back(traj.s_grid(plus));
    ++out.oscillations;
    const TangentVector gap = difference(traj.states[static_cast<size_t>(plus)],
                                         traj.states[static_cast<size_t>(minus)]);
    out.gap_sum += l2r_norm(gap);
    out.gap_sum_quad += l2r_norm_quad(gap);
    cursor = plus;
  }

  out.k_bound = 2.0 * ledger.frak_e / (delta * eps) + 1.0;
  out.gap_bound = ledger.frak_e / eps;
  out.dwell_bound = ledger.frak_e / (eps * eps);
  if (out.oscillations > out.k_bound) {
    out.pass = false;
    out.finding = "oscillation count exceeds the ledger bound";
  } else if (out.gap_sum > out.gap_bound) {
    out.pass = false;
    out.finding = "oscillation gap sum exceeds the energy budget";
  } else if (out.dwell_outside_b > out.dwell_bound) {
    out.pass = false;
    out.finding = "dwell time outside the action-derivation set too long";
  }
  return out;
}

GlobalBoundAudit l2_global_bound(const FloerTrajectory& traj,
                                 const BoundLedger& ledger, double eps) {
  GlobalBoundAudit out;
  out.bound = ledger.frak_y + ledger.v4 + std::sqrt(ledger.frak_e) +
              4.0 * ledger.m_hat * ledger.frak_a +
              5.0 * (ledger.frak_e / eps + ledger.delta);
  for (int i = 0; i < traj.nodes(); ++i) {
    const auto& u = traj.states[static_cast<size_t>(i)];
    const double norm = u.loop.l2_norm() + std::abs(u.eta);
    if (norm > out.worst_norm) {
      out.worst_norm = norm;
      out.worst_node = i;
    }
  }
  out.pass = out.worst_norm <= out.bound;
  out.slack_ratio = out.worst_norm > 0 ? out.bound / out.worst_norm : 0.0;
  return out;
}

MonitorAudit bounds1_monitors(const FloerTrajectory& traj,
                              const HomotopySpec& gamma,
                              const BoundLedger& ledger) {
  MonitorAudit out;
  out.sup_eta = traj.eta_trace.cwiseAbs().maxCoeff();
  out.sup_action = traj.action_trace.cwiseAbs().maxCoeff();
  double energy = 0.0;
  for (int i = 0; i < traj.nodes(); ++i) {
    const double w = (i == 0 || i == traj.nodes() - 1) ? 0.5 : 1.0;
    energy += w * traj.step() * traj.energy_density(i);
  }
  out.total_energy = energy;
  // residual-scale slack on the closed-form bounds
  const double slack = 10.0 * traj.residual + 1e-12;
  out.eta_ok = out.sup_eta <= ledger.frak_y + slack;
  out.action_ok = out.sup_action <= ledger.frak_a + slack;
  out.energy_ok = out.total_energy <= ledger.frak_e + slack;
  const HomotopyCondition hc =
      homotopy_condition(gamma, ledger.c_tilde, ledger.eps0);
  out.hs2_lhs = hc.lhs;
  out.hs2_ok = gamma.constant_homotopy() || hc.ok;
  out.pass = out.eta_ok && out.action_ok && out.energy_ok && out.hs2_ok;
  return out;
}

}  // namespace rabi
