#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>

#include "rabi/loop.hpp"

namespace rabi {

/// Standard complex structure J0 on R^{2n}: block rotation on each (q_i, p_i)
/// pair, J0 (q, p) = (-p, q). omega0(u, w) = <J0 u, w> and the induced metric
/// is the Euclidean one.
Eigen::VectorXd apply_j0(const Eigen::VectorXd& v);
Eigen::MatrixXd apply_j0_cols(const Eigen::MatrixXd& m);
double omega0(const Eigen::VectorXd& u, const Eigen::VectorXd& w);
/// Primitive lambda0 = (1/2) sum (q dp - p dq) evaluated at x on xi.
double lambda0(const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

/// Constants certifying the growth conditions, when a model ships a
/// closed-form argument for them.
struct GrowthConstants {
  double c1 = 0, c2 = 0, c3 = 0;    // global Liouville field bounds
  double c4 = 0, c5 = 0, nu = 0;    // banded Liouville field bounds
  double L = 0;                     // sup |D^3 H| * |x|
  double inf_grad_sigma = 0;        // inf over the 0-level set of |grad H|
};

/// An evaluatable Hamiltonian on (R^{2n}, omega0) with the derivative and
/// Liouville-field hooks the certification and flow machinery needs.
class HamiltonianModel {
 public:
  virtual ~HamiltonianModel() = default;

  virtual std::string name() const = 0;
  virtual int half_dim() const = 0;
  int dim() const { return 2 * half_dim(); }

  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;
  /// Upper bound for the operator norm of D^3 H at x.
  virtual double d3_bound(const Eigen::VectorXd& x) const = 0;

  /// Global Liouville field X-dagger. Default: the radial field x/2.
  virtual Eigen::VectorXd liouville_global(const Eigen::VectorXd& x) const;
  /// Liouville field X-ddagger defined on the band H^{-1}((-nu, nu)).
  /// Default: same as the global field.
  virtual Eigen::VectorXd liouville_local(const Eigen::VectorXd& x) const;

  /// Closed-form constants, present only for models with a registered proof.
  virtual std::optional<GrowthConstants> registered_constants() const {
    return std::nullopt;
  }

  Eigen::VectorXd hamiltonian_field(const Eigen::VectorXd& x) const {
    return apply_j0(gradient(x));
  }

  double mean_value(const Loop& v) const;
  Eigen::MatrixXd gradient_cols(const Loop& v) const;
};

using HamiltonianPtr = std::shared_ptr<const HamiltonianModel>;

/// H(x) = (|x - center|^2 - rho^2) / 2; the 0-level set is the sphere of
/// radius rho around the center.
class ShiftedSphere : public HamiltonianModel {
 public:
  ShiftedSphere(Eigen::VectorXd center, double rho);

  std::string name() const override { return "shifted_sphere"; }
  int half_dim() const override { return static_cast<int>(center_.size()) / 2; }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;
  double d3_bound(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::VectorXd liouville_global(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd liouville_local(const Eigen::VectorXd& x) const override;
  std::optional<GrowthConstants> registered_constants() const override;

  const Eigen::VectorXd& center() const { return center_; }
  double rho() const { return rho_; }

 private:
  Eigen::VectorXd center_;
  double rho_;
};

/// H(x) = <x, A x> / 2 - level, A symmetric positive definite.
class QuadraticForm : public HamiltonianModel {
 public:
  QuadraticForm(Eigen::MatrixXd a, double level);

  std::string name() const override { return "quadratic_form"; }
  int half_dim() const override { return static_cast<int>(a_.rows()) / 2; }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const override { return a_; }
  double d3_bound(const Eigen::VectorXd&) const override { return 0.0; }
  std::optional<GrowthConstants> registered_constants() const override;

 private:
  Eigen::MatrixXd a_;
  double level_;
  double eig_min_ = 0, eig_max_ = 0;
};

/// H(x) = sum_i q_i p_i - level. For level > 0 the 0-level set is a
/// non-compact hyperbola-type hypersurface; the certified Liouville field is
/// x/2 + sum_i (p_i dq-dir + q_i dp-dir), which differs from the radial field
/// by a Hamiltonian field.
class Hyperbola : public HamiltonianModel {
 public:
  Hyperbola(int half_dim, double level);

  std::string name() const override { return "hyperbola"; }
  int half_dim() const override { return n_; }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;
  double d3_bound(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::VectorXd liouville_global(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd liouville_local(const Eigen::VectorXd& x) const override;
  std::optional<GrowthConstants> registered_constants() const override;

 private:
  int n_;
  double level_;
};

/// Compactly supported C^3 bump A (1 - |x-c|^2/w^2)^4 on the ball |x-c| < w.
struct RadialBump {
  Eigen::VectorXd center;
  double width = 1.0;
  double amplitude = 0.0;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  double d3_bound(const Eigen::VectorXd& x) const;
  /// max over the support of (|h|, |grad h|, |Hess h|, |D3 h|), sampled.
  double c3_norm(std::uint64_t seed = 7u, int n_samples = 4096) const;
};

/// Base model plus a scaled bump. Liouville fields are inherited from the
/// base, matching how uniform admissibility of a perturbed family is set up.
class PerturbedModel : public HamiltonianModel {
 public:
  PerturbedModel(HamiltonianPtr base, RadialBump bump, double scale = 1.0);

  std::string name() const override { return base_->name() + "+bump"; }
  int half_dim() const override { return base_->half_dim(); }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;
  double d3_bound(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd liouville_global(const Eigen::VectorXd& x) const override {
    return base_->liouville_global(x);
  }
  Eigen::VectorXd liouville_local(const Eigen::VectorXd& x) const override {
    return base_->liouville_local(x);
  }

  const HamiltonianPtr& base() const { return base_; }
  const RadialBump& bump() const { return bump_; }
  double scale() const { return scale_; }

 private:
  HamiltonianPtr base_;
  RadialBump bump_;
  double scale_;
};

/// The perturbation neighborhood attached to a base Hamiltonian and a compact
/// ball K: bumps h with |h|_{C^3(K)} below the theta radius.
struct PerturbationBall {
  HamiltonianPtr base;
  double k_radius = 0.0;
  double theta = 0.0;

  bool admits(const RadialBump& h) const;
};

/// Closest point on the 0-level set to x (Lagrange-Newton, seeded by gradient
/// retraction). Used by distance diagnostics and the tube projection.
Eigen::VectorXd closest_point_on_sigma(const HamiltonianModel& h,
                                       const Eigen::VectorXd& x,
                                       double tol = 1e-12, int max_iter = 80);

}  // namespace rabi
