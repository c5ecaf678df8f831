#pragma once

#include <Eigen/Dense>

#include <functional>

namespace rabi {

/// A discretized smooth loop S^1 -> R^{2n}, sampled at t_j = j/N.
///
/// Rows of the sample matrix are the 2n coordinates in interleaved (q_i, p_i)
/// order; columns are the N time samples. Loops are immutable values: all
/// operations return new objects, so sharing across threads is safe.
class Loop {
 public:
  /// Default: the zero loop in R^2 on the coarsest grid.
  Loop() : Loop(1, Eigen::MatrixXd::Zero(2, 8)) {}
  Loop(int half_dim, Eigen::MatrixXd samples);

  static Loop constant(const Eigen::VectorXd& point, int n_samples);
  static Loop from_function(
      int half_dim, int n_samples,
      const std::function<Eigen::VectorXd(double)>& f);

  int half_dim() const { return n_; }
  int dim() const { return 2 * n_; }
  int n_samples() const { return static_cast<int>(samples_.cols()); }

  const Eigen::MatrixXd& samples() const { return samples_; }
  /// Cached half-spectrum Fourier coefficients (see fourier.hpp layout).
  const Eigen::MatrixXcd& modes() const { return modes_; }

  Eigen::VectorXd at(int j) const { return samples_.col(mod_index(j)); }
  int mod_index(int j) const {
    const int n = n_samples();
    return ((j % n) + n) % n;
  }

  /// Spectral time derivative as a new loop.
  Loop derivative() const;
  /// Time-average (1/N) sum_j v(t_j).
  Eigen::VectorXd mean() const { return samples_.rowwise().mean(); }
  /// Time-reversed loop t -> v(-t) on the same grid.
  Loop time_reversed() const;
  /// Refine onto a finer grid by trigonometric interpolation.
  Loop resampled(int n_out) const;

  double l2_norm() const;
  double linf_norm() const;

 private:
  int n_;
  Eigen::MatrixXd samples_;
  Eigen::MatrixXcd modes_;
};

/// A loop together with its Lagrange multiplier (period) eta.
struct LoopMultiplier {
  Loop loop;
  double eta = 0.0;
};

/// A tangent vector (xi, sigma) at some loop: xi is sampled like the loop
/// itself, sigma is the multiplier direction.
struct TangentVector {
  Eigen::MatrixXd xi;
  double sigma = 0.0;

  static TangentVector zero(int dim, int n_samples) {
    return {Eigen::MatrixXd::Zero(dim, n_samples), 0.0};
  }
  TangentVector operator+(const TangentVector& o) const {
    return {xi + o.xi, sigma + o.sigma};
  }
  TangentVector operator-(const TangentVector& o) const {
    return {xi - o.xi, sigma - o.sigma};
  }
  TangentVector operator*(double c) const { return {xi * c, sigma * c}; }
};

double l2_norm(const Eigen::MatrixXd& sampled_field);
double l2_norm(const TangentVector& w);

/// L2 x R norms on pairs. The additive form |xi|_{L2} + |sigma| is the
/// canonical one for every bound check in this project; the quadratic form
/// sqrt(|xi|^2 + sigma^2) backs the metric-equivalence diagnostics.
double l2r_norm(const TangentVector& w);
double l2r_norm_quad(const TangentVector& w);

double w12_norm(const Loop& v);
double w12_norm(const Eigen::MatrixXd& xi_samples);

/// Additive L2 x R distance between two states on the same grid.
double l2r_distance(const LoopMultiplier& a, const LoopMultiplier& b);

/// Discrete L2 pairing ((1/N) sum_j <a_j, b_j>) + sigma_a * sigma_b.
double l2r_inner(const TangentVector& a, const TangentVector& b);

TangentVector difference(const LoopMultiplier& a, const LoopMultiplier& b);

}  // namespace rabi
