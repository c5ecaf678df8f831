#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rabi/certify.hpp"
#include "rabi/floer.hpp"
#include "rabi/tube.hpp"

namespace rabi {

/// Every derived lemma constant with its inputs echoed. All "large enough"
/// thresholds are pinned by bisection on the explicit inequality chains, so
/// a ledger is reproducible bit-for-bit from its inputs.
struct BoundLedger {
  // echoed inputs
  AdmissibilityCertificate cert;
  double a = 0, b = 0;
  double j_norm_inf = 1.0;
  double ng = 1.0;        // multiplier half-width of the J-variation region
  double v_radius = 0.0;  // radius of the perturbation region V
  double k_radius = 0.0;  // radius of the compact set K
  double n_radius = 0.0;  // radius cap of the chosen N inside Sigma
  double v3 = 0.0;        // empirical orbit-family sup (input, may be 0)

  // eta-action linearity threshold and slope
  double eps0 = 0, c_tilde = 0, v0 = 0;
  // a-priori trajectory bounds
  double frak_y = 0, frak_a = 0, frak_e = 0;
  // tube radii
  double delta0 = 0, delta = 0;
  // far-field derivative threshold at delta
  double eps1_delta = 0, v1_delta = 0;
  // level-band collapse width at delta
  double mu_delta = 0;
  // partition constants at delta/2 (canonical usage)
  double eps2_half = 0, v2_half = 0;
  double r_kv = 0;  // sup over K union V of |x|
  // oscillation accounting
  double v4 = 0, eps = 0, k_max = 0;
  // projection drift constant and gradient floor radius
  double m_hat = 0, r_grad_floor = 0;
  // plurisubharmonic growth constants
  double alpha1 = 0, alpha2 = 0, alpha3 = 0, alpha4 = 0;
};

struct LedgerOverrides {
  std::optional<double> delta;
  std::optional<double> eps;
};

/// Threshold of the eta-action linearity estimate: the smallest radius past
/// which both proof inequalities hold, then the two closed forms.
struct Eps0Result {
  double eps0 = 0, c_tilde = 0, v0 = 0;
};
Eps0Result compute_eps0_ctilde(const AdmissibilityCertificate& cert);

/// Closed-form a-priori bounds on eta, action and energy over a window.
struct AprioriBounds {
  double frak_y = 0, frak_a = 0, frak_e = 0;
};
AprioriBounds apriori_bounds(double a, double b, double c_tilde, double eps0,
                             double j_norm_inf);

/// Far-field bound pair: eps1(delta) closed form and the bisected radius
/// v1(delta) past which |eta| <= delta and |d_t v| <= delta.
struct Eps1V1 {
  double eps1 = 0, v1 = 0;
};
Eps1V1 eps1_v1(double delta, double frak_a,
               const AdmissibilityCertificate& cert);

/// Band width mu(delta): inside |H| < mu every point is delta-close to
/// Sigma. The infimum of the gradient floor is located at the crossing of
/// the two growth floors by bisection.
double mu_of_delta(double delta, const AdmissibilityCertificate& cert);

/// Partition thresholds eps2(delta, |J|) and v2(delta, r).
double eps2_threshold(double delta, double j_norm_inf, double frak_a,
                      const AdmissibilityCertificate& cert);
double v2_threshold(double delta, double r, double frak_a,
                    const AdmissibilityCertificate& cert);

/// Full deterministic ledger pipeline.
BoundLedger compute_ledger(const AdmissibilityCertificate& cert, double a,
                           double b, double j_norm_inf, double ng,
                           double v_radius, double k_radius, double n_radius,
                           double v3, const LedgerOverrides& overrides = {});

/// Re-derives every field from the echoed inputs and compares bit-for-bit.
bool ledger_reproduces(const BoundLedger& ledger);

// ---------------------------------------------------------------------------
// membership and audits

/// Membership in the set of infinitesimal action derivation
/// B(frak_a, frak_y, eps): |eta| <= frak_y and at some homotopy time the
/// action is within frak_a while the gradient is within eps.
bool in_b(const HomotopySpec& gamma, const LoopMultiplier& u, double frak_a,
          double frak_y, double eps, int homotopy_scan = 11);

bool in_k0(const HamiltonianModel& h, const LoopMultiplier& u,
           const BoundLedger& ledger);
bool in_n_delta_r(const HamiltonianModel& h, const LoopMultiplier& u,
                  double delta, double r);

enum class PartitionClass { k1, u1, outside };

struct PartitionResult {
  PartitionClass cls = PartitionClass::outside;
  bool bounds_hold = true;  // the asserted lemma conclusions
  double dist_w12 = 0.0;    // for u1: distance to Sigma x {0}
  double dt_norm = 0.0;     // loop derivative norm
  std::string note;
};

/// Classification of an in-B state at tube scale delta (canonically
/// ledger.delta / 2). A violated conclusion is reported as a finding.
PartitionResult partition(const HomotopySpec& gamma, const LoopMultiplier& u,
                          const BoundLedger& ledger, double delta);

struct OscillationAudit {
  std::vector<double> tau;  // tau_1, tau_2-, tau_2+, tau_3-, ... (s values)
  int oscillations = 0;     // the K of the sequence
  double gap_sum = 0.0;     // additive norm of the minus/plus jumps
  double gap_sum_quad = 0.0;
  double dwell_outside_b = 0.0;
  double k_bound = 0.0, gap_bound = 0.0, dwell_bound = 0.0;
  bool pass = true;
  std::string finding;
};

OscillationAudit oscillation_audit(const FloerTrajectory& traj,
                                   const HomotopySpec& gamma,
                                   const BoundLedger& ledger, double eps,
                                   double delta);

struct GlobalBoundAudit {
  double bound = 0.0;
  double worst_norm = 0.0;
  int worst_node = 0;
  bool pass = true;
  double slack_ratio = 0.0;  // bound / worst
};

/// Closed-form trajectory bound frak_y + v4 + sqrt(frak_e) + 4 M_hat frak_a
/// + 5 (frak_e / eps + delta), checked at every node.
GlobalBoundAudit l2_global_bound(const FloerTrajectory& traj,
                                 const BoundLedger& ledger, double eps);

struct MonitorAudit {
  double sup_eta = 0, sup_action = 0, total_energy = 0;
  double hs2_lhs = 0;
  bool eta_ok = true, action_ok = true, energy_ok = true, hs2_ok = true;
  bool pass = true;
};

/// The a-priori monitors on a solved trajectory, with the homotopy smallness
/// precheck for non-constant homotopies.
MonitorAudit bounds1_monitors(const FloerTrajectory& traj,
                              const HomotopySpec& gamma,
                              const BoundLedger& ledger);

}  // namespace rabi
