#pragma once

#include <string>
#include <vector>

#include "rabi/certify.hpp"
#include "rabi/floer.hpp"

namespace rabi {

struct BoundLedger;

/// Interaction of the radial plurisubharmonic function F = |x|^2/4 with the
/// Hamiltonian field, evaluated through the explicit forms:
///   f2 = -<grad H, grad F>,
///   f1 = d(dF(X^H))(X^H) - |grad H|^2 - |grad(dcF(X^H))|^2
///        - |grad(dF(X^H))|^2.
struct F12 {
  double f1 = 0.0;
  double f2 = 0.0;
};
F12 f1_f2(const HamiltonianModel& h, const Eigen::VectorXd& x);

/// Finite-difference gradients of f1 and f2 for the growth sampler.
Eigen::VectorXd grad_f1_fd(const HamiltonianModel& h, const Eigen::VectorXd& x,
                           double eps = 1e-5);
Eigen::VectorXd grad_f2_fd(const HamiltonianModel& h, const Eigen::VectorXd& x,
                           double eps = 1e-5);

/// Quadratic growth constants of f1 and f2:
///   |f1| <= a1 (|x|+1)^2, |f2| <= a2 (|x|+1)^2,
///   |grad f1| <= a3 (|x|+1), |grad f2| <= a4 (|x|+1).
struct AlphaConstants {
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0;
};
AlphaConstants alpha_constants(const AdmissibilityCertificate& cert);

/// A connected component of the cylinder grid where the loop leaves the
/// K-infinity ball, with its audit results.
struct PatchReport {
  int id = 0;
  int node_count = 0, interior_count = 0;
  double s_min = 0, s_max = 0;
  double worst_defect = 0;        // max over interior of f - laplacian
  bool inequality_ok = true;      // laplacian >= f - tol_disc
  double sup_interior = 0, sup_boundary = 0;  // of F on the patch
  double f_l1 = 0, ft_l1 = 0, fs_l1 = 0;      // measured W^{1,1} pieces
  double f_l1_budget = 0, ft_l1_budget = 0, fs_l1_budget = 0;
  bool budget_ok = true;
  double dwell = 0, dwell_bound = 0;
  bool dwell_ok = true;
  std::string finding;
};

struct EllipticAuditOptions {
  double tol_disc = -1.0;  // < 0: measure against a higher-order laplacian
  double v_bound = 0.0;    // global L2 bound entering the budgets
};

struct EllipticAudit {
  double k_inf_radius = 0;
  double tol_disc = 0;
  std::vector<PatchReport> patches;
  bool pass = true;
};

/// Pointwise elliptic inequality laplacian(F o v) >= f on every patch
/// outside the K-infinity ball, with the W^{1,1} budget chain and the
/// interior/boundary sup gap reported per patch.
EllipticAudit elliptic_audit(const FloerTrajectory& traj,
                             const HomotopySpec& gamma, double k_inf_radius,
                             const BoundLedger& ledger,
                             const EllipticAuditOptions& opts = {});

/// Smallest ball radius containing the perturbation regions and every loop
/// image at in-B trajectory points, with a 10 percent margin.
double k_infinity_radius(const std::vector<FloerTrajectory>& batch,
                         const HomotopySpec& gamma, const BoundLedger& ledger,
                         double eps);

}  // namespace rabi
