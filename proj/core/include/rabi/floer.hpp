#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rabi/action.hpp"
#include "rabi/hamiltonian.hpp"
#include "rabi/loop.hpp"
#include "rabi/orbit.hpp"

namespace rabi {

/// Homotopy of Hamiltonians H_s = H0 + beta(s) (H1 - H0) with a smoothstep
/// ramp constant outside [0, 1]; the difference is a compactly supported
/// bump. The almost complex structure is constant in s.
struct HomotopySpec {
  HamiltonianPtr base;
  std::optional<RadialBump> bump;
  AlmostComplexSpec j;

  bool constant_homotopy() const {
    return !bump.has_value() || bump->amplitude == 0.0;
  }
  /// smoothstep 3 s^2 - 2 s^3 clamped; maximal slope 3/2 at s = 1/2
  static double beta(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
  }
  static double dbeta(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 6.0 * s * (1.0 - s);
  }
  HamiltonianPtr model_at(double s) const;
  HamiltonianPtr h_start() const { return base; }
  HamiltonianPtr h_end() const { return model_at(1.0); }
  /// max over s, x of |beta'(s) (H1 - H0)(x)| = (3/2) |amplitude|
  double ds_h_inf() const {
    return constant_homotopy() ? 0.0 : 1.5 * std::abs(bump->amplitude);
  }
};

/// A discretized cylinder trajectory with per-node diagnostics.
struct FloerTrajectory {
  Eigen::VectorXd s_grid;
  std::vector<LoopMultiplier> states;
  Eigen::VectorXd action_trace;     // A^{H_s}(u_i)
  Eigen::VectorXd grad_norm_trace;  // additive L2 x R gradient norm
  Eigen::VectorXd energy_density;   // squared g_J norm of the gradient
  Eigen::VectorXd eta_trace;
  Eigen::VectorXd residual_trace;   // additive norm of D_s u - grad A
  double residual = 0.0;            // max over nodes
  double endpoint_gap_lo = 0.0, endpoint_gap_hi = 0.0;
  int stencil_order = 6;

  int nodes() const { return static_cast<int>(states.size()); }
  double step() const {
    return nodes() > 1 ? s_grid(1) - s_grid(0) : 0.0;
  }
};

/// Finite-difference s-derivative of a state path with centered stencils of
/// the given order (shrinking near the edges).
std::vector<TangentVector> path_s_derivative(
    const std::vector<LoopMultiplier>& states, double h, int order);

/// Fills all traces from the states (and measures the residual).
void fill_trajectory_diagnostics(FloerTrajectory& traj,
                                 const HomotopySpec& gamma);

/// Max Floer-equation defect at off-grid s-midpoints: states are
/// interpolated with the local degree-5 polynomial and differentiated
/// exactly, so the value measures discretization consistency.
double midpoint_residual(const FloerTrajectory& traj,
                         const HomotopySpec& gamma);

// ---------------------------------------------------------------------------

struct ExploreOptions {
  double ceiling = 1e3;       // blow-up abort on the loop sup norm
  double target_step = 5e-3;  // step control: dt ~ target_step / |grad|
  double max_dt = 5e-2;
  int max_steps = 100000;
  int record_every = 1;
};

struct ExploreResult {
  FloerTrajectory trajectory;
  bool aborted = false;
  std::string message;
  double truncated_tail_energy = 0.0;  // max energy removed by the mode cap
};

/// Forward integration of the positive gradient flow with all Fourier modes
/// above mode_cap projected out each step. The untruncated evolution is not
/// well posed as an initial value problem, so this is an explorer with a
/// mandatory cap and short spans, not the certified solver.
ExploreResult integrate_explore(const HomotopySpec& gamma,
                                const LoopMultiplier& u0, double s_begin,
                                double s_end, int mode_cap,
                                const ExploreOptions& opts = {});

// ---------------------------------------------------------------------------

/// Endpoint handling for solve_bvp. A sigma component is penalized against
/// its moving projection onto Sigma x {0}; a fixed component against the
/// phase-aligned representative.
struct EndpointSpec {
  enum class Type { sigma_component, fixed_component };
  Type type = Type::fixed_component;
  CriticalComponent component;

  static EndpointSpec sigma(const CriticalComponent& c) {
    return {Type::sigma_component, c};
  }
  static EndpointSpec fixed(const CriticalComponent& c) {
    return {Type::fixed_component, c};
  }
};

struct SolveBvpOptions {
  int nodes = 200;
  double s_span = 8.0;       // grid on [-s_span, s_span]
  int stencil_order = 6;     // 2, 4 or 6
  double residual_tol = 1e-8;
  double endpoint_weight = 1.0;        // anchoring weight for the warmup
  double endpoint_weight_final = 1e-4; // relaxed weight for the polish
  int ncg_warmup = 40;       // preconditioned nonlinear-CG iterations
  int max_outer = 60;        // Gauss-Newton polish iterations
  int max_inner = 160;       // PCG iterations per Gauss-Newton step
  double inner_tol = 5e-3;
  bool verbose = false;
  std::optional<std::vector<LoopMultiplier>> initial_path;
};

struct BvpResult {
  FloerTrajectory trajectory;
  bool converged = false;
  int outer_iterations = 0;
  std::string message;
};

/// Global least-squares Floer solve: minimizes the summed squared node
/// residuals |D_s u - grad A^{H_s}(u)|^2 plus soft endpoint penalties, by a
/// preconditioned nonlinear-CG warmup and Gauss-Newton (Levenberg-Marquardt)
/// polish. Works in the standard J0 structure.
BvpResult solve_bvp(const HomotopySpec& gamma, const EndpointSpec& lo,
                    const EndpointSpec& hi, const SolveBvpOptions& opts = {});

// ---------------------------------------------------------------------------

/// Homotopy smallness condition (c + |J|^{3/2}/eps0) |d_s H|_inf < 1/8.
struct HomotopyCondition {
  double lhs = 0.0;
  bool ok = false;
};
HomotopyCondition homotopy_condition(const HomotopySpec& gamma, double c_tilde,
                                     double eps0);

/// Novikov finiteness window: returns (A lower bound, B upper bound) =
/// (min{2a, -1}, max{2b, 1}).
std::pair<double, double> novikov_window(double a, double b);

}  // namespace rabi
