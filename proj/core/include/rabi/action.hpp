#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "rabi/hamiltonian.hpp"
#include "rabi/loop.hpp"

namespace rabi {

/// Almost complex structure data: the standard J0, optionally perturbed by a
/// compatible deformation supported in the ball |x - v_center| < v_radius and
/// for multipliers |eta| <= ng. Outside that region J == J0 exactly.
class AlmostComplexSpec {
 public:
  struct Perturbation {
    Eigen::VectorXd v_center;
    double v_radius = 1.0;
    double ng = 1.0;
    double amplitude = 0.0;  // strength of the deformation parameter
  };

  AlmostComplexSpec() = default;
  explicit AlmostComplexSpec(Perturbation p) : pert_(std::move(p)) {}

  bool is_standard() const { return !pert_.has_value(); }
  const std::optional<Perturbation>& perturbation() const { return pert_; }

  /// Matrix of J at (x, eta).
  Eigen::MatrixXd matrix(const Eigen::VectorXd& x, double eta) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x, double eta,
                        const Eigen::VectorXd& v) const;

  /// sup of the pointwise operator norm over a deterministic sample of the
  /// perturbation region; exactly 1 for the standard structure.
  double norm_inf() const;

 private:
  double bump(const Eigen::VectorXd& x, double eta) const;
  std::optional<Perturbation> pert_;
};

/// Rabinowitz action of (v, eta): mean_t lambda0(d_t v) - eta * mean_t H(v).
double action(const HamiltonianModel& h, const LoopMultiplier& u);

/// Differential of the action at u applied to (xi, sigma).
double action_differential(const HamiltonianModel& h, const LoopMultiplier& u,
                           const TangentVector& w);

/// Gradient with respect to the metric induced by J:
///   v-part  = -J(v,eta) (d_t v - eta X^H(v)),
///   eta-part = -mean_t H(v).
TangentVector action_gradient(const HamiltonianModel& h,
                              const AlmostComplexSpec& j,
                              const LoopMultiplier& u);
TangentVector action_gradient(const HamiltonianModel& h,
                              const LoopMultiplier& u);

/// Hessian of the action at u applied to w, in the standard J0 chart:
///   v-part  = -J0 (d_t xi - sigma X^H(v)) - eta Hess H(v) xi,
///   eta-part = -mean_t dH(xi).
/// Rejects perturbed J.
TangentVector hessian_apply(const HamiltonianModel& h, const LoopMultiplier& u,
                            const TangentVector& w,
                            const AlmostComplexSpec& j = {});

/// Structural identity of the action against a Liouville field Y:
///   A(v,eta) - dA_(v,eta)(Y(v), eta) = eta * mean_t dH(Y(v)).
/// Returns |LHS - RHS| and optionally the RHS value.
double dhy_identity_residual(
    const HamiltonianModel& h, const LoopMultiplier& u,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& y,
    double* rhs_out = nullptr);

/// Squared g_J norm of a tangent vector at u.
double gj_norm_sq(const AlmostComplexSpec& j, const LoopMultiplier& u,
                  const TangentVector& w);

}  // namespace rabi
