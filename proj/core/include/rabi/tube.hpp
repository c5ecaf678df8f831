#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rabi/action.hpp"
#include "rabi/hamiltonian.hpp"
#include "rabi/loop.hpp"

namespace rabi {

/// Tube coordinates of a state near Sigma x {0}: a base point on Sigma (as a
/// constant loop) and a normal vector whose loop part has its mean parallel
/// to grad H at the base.
struct TubeCoordinates {
  Eigen::VectorXd base;    // point on Sigma
  TangentVector normal;    // (v - base, eta)
  double radius = 0.0;     // |xi|_{L2} + |eta|
};

struct ProjectOptions {
  double newton_tol = 1e-11;
  int max_iterations = 50;
};

/// Projection onto Sigma x {0}: solves mean(v) - vbar = lambda grad H(vbar),
/// H(vbar) = 0, seeded at the closest point of mean(v) on Sigma. A failed
/// solve signals that the state is out of the tube.
std::optional<TubeCoordinates> project(const HamiltonianModel& h,
                                       const LoopMultiplier& u,
                                       const ProjectOptions& opts = {});

/// Inverse chart: (vbar, (xi, sigma)) -> (vbar + xi, sigma).
LoopMultiplier tube_chart(const Eigen::VectorXd& base,
                          const TangentVector& normal, int half_dim);

/// Additive L2 x R distance from u to Sigma x {0} (exact over constant
/// loops on Sigma).
double dist_l2r_to_sigma(const HamiltonianModel& h, const LoopMultiplier& u);
/// Additive W^{1,2} x R distance from u to Sigma x {0}.
double dist_w12_to_sigma(const HamiltonianModel& h, const LoopMultiplier& u);

struct TaylorCheck {
  double lhs = 0.0;        // norm of the expansion remainder
  double rhs_bound = 0.0;  // (M/2) radius^2
  bool pass = false;
};

/// First-order expansion of the action gradient around the projected base:
/// remainder must sit below (M/2)(|xi| + |eta|)^2.
TaylorCheck taylor_remainder(const HamiltonianModel& h, const LoopMultiplier& u,
                             double m_const);

struct FloorCheck {
  double lhs = 0.0;    // |Hess A (w)|_{L2 x R} at (vbar, 0)
  double floor = 0.0;  // (1/6)(|xi|_{W^{1,2}} + |eta|)
  bool pass = false;
  bool precondition_ok = false;  // |grad H(vbar)| >= 1/2 and w normal
};

/// Lower bound of the Hessian on normal vectors at on-Sigma base points.
FloorCheck hessian_normal_floor(const HamiltonianModel& h,
                                const Eigen::VectorXd& vbar,
                                const TangentVector& w);

/// Builds a normal vector at vbar from arbitrary loop data: the mean of the
/// loop part is projected onto the grad H(vbar) line.
TangentVector make_normal_vector(const HamiltonianModel& h,
                                 const Eigen::VectorXd& vbar,
                                 const TangentVector& raw);

struct DriftAudit {
  bool applicable = false;   // segment stayed in the tube with the grad floor
  int first_node = 0, last_node = 0;  // maximal audited subsegment
  double lhs = 0.0;          // |P(u(s1)) - P(u(s0))|
  double rhs = 0.0;          // M_hat |A(u(s1)) - A(u(s0))|
  bool pass = true;
  std::string note;
};

/// Projection-drift audit over a trajectory segment: audits the maximal
/// subsegment whose states live in the tube of radius delta with
/// |grad H(P(u))| >= 1/2, comparing base-point drift with M_hat = 72 M times
/// the action increment.
DriftAudit drift_audit(const HamiltonianModel& h,
                       const std::vector<LoopMultiplier>& segment,
                       double delta, double m_hat);

struct InjectivityResult {
  bool pass = true;
  std::string witness;
};

/// Samples tube coordinates at the given radius and checks that the chart is
/// injective and consistent with the projection round trip.
InjectivityResult tube_injectivity_check(const HamiltonianModel& h,
                                         double delta, int n_samples,
                                         std::uint64_t seed = 2024);

}  // namespace rabi
