#include "rabi/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

#include "rabi/rng.hpp"

namespace rabi {

Eigen::VectorXd apply_j0(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i + 1 < v.size(); i += 2) {
    out(i) = -v(i + 1);
    out(i + 1) = v(i);
  }
  return out;
}

Eigen::MatrixXd apply_j0_cols(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i + 1 < m.rows(); i += 2) {
    out.row(i) = -m.row(i + 1);
    out.row(i + 1) = m.row(i);
  }
  return out;
}

double omega0(const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  return apply_j0(u).dot(w);
}

double lambda0(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  return 0.5 * omega0(x, xi);
}

Eigen::VectorXd HamiltonianModel::liouville_global(
    const Eigen::VectorXd& x) const {
  return 0.5 * x;
}

Eigen::VectorXd HamiltonianModel::liouville_local(
    const Eigen::VectorXd& x) const {
  return liouville_global(x);
}

double HamiltonianModel::mean_value(const Loop& v) const {
  double acc = 0.0;
  for (int j = 0; j < v.n_samples(); ++j) acc += value(v.samples().col(j));
  return acc / v.n_samples();
}

Eigen::MatrixXd HamiltonianModel::gradient_cols(const Loop& v) const {
  Eigen::MatrixXd g(v.dim(), v.n_samples());
  for (int j = 0; j < v.n_samples(); ++j)
    g.col(j) = gradient(v.samples().col(j));
  return g;
}

// ---------------------------------------------------------------------------
// shifted sphere

ShiftedSphere::ShiftedSphere(Eigen::VectorXd center, double rho)
    : center_(std::move(center)), rho_(rho) {
  if (center_.size() % 2 != 0 || center_.size() < 2)
    throw std::invalid_argument("center dimension must be even and positive");
  if (rho_ <= 0) throw std::invalid_argument("sphere radius must be positive");
}

double ShiftedSphere::value(const Eigen::VectorXd& x) const {
  return 0.5 * ((x - center_).squaredNorm() - rho_ * rho_);
}

Eigen::VectorXd ShiftedSphere::gradient(const Eigen::VectorXd& x) const {
  return x - center_;
}

Eigen::MatrixXd ShiftedSphere::hessian(const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Identity(dim(), dim());
}

Eigen::VectorXd ShiftedSphere::liouville_global(
    const Eigen::VectorXd& x) const {
  return 0.5 * x;
}

Eigen::VectorXd ShiftedSphere::liouville_local(const Eigen::VectorXd& x) const {
  // (x - center)/2 is the radial Liouville field of the translated primitive;
  // translation keeps L_X omega = omega.
  return 0.5 * (x - center_);
}

std::optional<GrowthConstants> ShiftedSphere::registered_constants() const {
  // Stated for the centered sphere; the translated case keeps c2 and inflates
  // c3 through |center|. dH(x/2) = (|x|^2 - <c,x>)/2 >= |x|^2/4 - |c|^2/2.
  GrowthConstants g;
  const double c = center_.norm();
  if (c == 0.0) {
    g.c1 = 0.5;
    g.c2 = 0.5;
    g.c3 = 0.0;
  } else {
    // dH(x/2) = |x|^2/2 - <c,x>/2 >= |x|^2/4 - c^2/4
    g.c1 = 0.5;
    g.c2 = 0.25;
    g.c3 = 0.25 * c * c;
  }
  // Banded field (x - center)/2: |x-c|/2 <= (|x-c|^2+1)/4 <=
  // (1+c)^2 (|x|^2+1)/4. dH(X) = |x-center|^2/2, which on the band
  // H in (-nu, nu), nu = rho^2/4, stays above (rho^2 - 2 nu)/2 = rho^2/4.
  g.nu = 0.25 * rho_ * rho_;
  g.c4 = 0.25 * (1.0 + c) * (1.0 + c);
  g.c5 = 0.25 * rho_ * rho_;
  g.L = 0.0;
  g.inf_grad_sigma = rho_;
  return g;
}

// ---------------------------------------------------------------------------
// positive definite quadratic form

QuadraticForm::QuadraticForm(Eigen::MatrixXd a, double level)
    : a_(std::move(a)), level_(level) {
  if (a_.rows() != a_.cols() || a_.rows() % 2 != 0)
    throw std::invalid_argument("quadratic form must be even-dimensional");
  if (!a_.isApprox(a_.transpose(), 1e-12))
    throw std::invalid_argument("quadratic form must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_);
  eig_min_ = es.eigenvalues().minCoeff();
  eig_max_ = es.eigenvalues().maxCoeff();
  if (eig_min_ <= 0 || level_ <= 0)
    throw std::invalid_argument(
        "quadratic_form requires positive definite A and positive level");
}

double QuadraticForm::value(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(a_ * x) - level_;
}

Eigen::VectorXd QuadraticForm::gradient(const Eigen::VectorXd& x) const {
  return a_ * x;
}

std::optional<GrowthConstants> QuadraticForm::registered_constants() const {
  GrowthConstants g;
  g.c1 = 0.5;
  g.c2 = 0.5 * eig_min_;
  g.c3 = 0.0;
  g.nu = 0.5 * level_;
  // On the band, <x, Ax> in (level, 3 level), so dH(x/2) > level/2.
  g.c5 = 0.5 * level_;
  g.c4 = 0.25;  // |x|/2 <= (|x|^2 + 1)/4 everywhere
  g.L = 0.0;
  // |grad H|^2 = <Ax, Ax> >= eig_min <x, Ax> = 2 eig_min level on Sigma.
  g.inf_grad_sigma = std::sqrt(2.0 * eig_min_ * level_);
  return g;
}

// ---------------------------------------------------------------------------
// hyperbola

Hyperbola::Hyperbola(int half_dim, double level) : n_(half_dim), level_(level) {
  if (n_ < 1) throw std::invalid_argument("half_dim must be positive");
  if (level_ <= 0) throw std::invalid_argument("hyperbola level must be > 0");
}

double Hyperbola::value(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += x(2 * i) * x(2 * i + 1);
  return s - level_;
}

Eigen::VectorXd Hyperbola::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(2 * n_);
  for (int i = 0; i < n_; ++i) {
    g(2 * i) = x(2 * i + 1);
    g(2 * i + 1) = x(2 * i);
  }
  return g;
}

Eigen::MatrixXd Hyperbola::hessian(const Eigen::VectorXd&) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n_, 2 * n_);
  for (int i = 0; i < n_; ++i) {
    h(2 * i, 2 * i + 1) = 1.0;
    h(2 * i + 1, 2 * i) = 1.0;
  }
  return h;
}

Eigen::VectorXd Hyperbola::liouville_global(const Eigen::VectorXd& x) const {
  // x/2 plus the Hamiltonian field of sum (q^2 + p^2)/2-type corrections:
  // (q, p) -> (q/2 + p, p/2 + q) per symplectic pair.
  Eigen::VectorXd out(2 * n_);
  for (int i = 0; i < n_; ++i) {
    out(2 * i) = 0.5 * x(2 * i) + x(2 * i + 1);
    out(2 * i + 1) = 0.5 * x(2 * i + 1) + x(2 * i);
  }
  return out;
}

Eigen::VectorXd Hyperbola::liouville_local(const Eigen::VectorXd& x) const {
  return liouville_global(x);
}

std::optional<GrowthConstants> Hyperbola::registered_constants() const {
  // dH(X) = sum q p + |x|^2 >= |x|^2 / 2 by AM-GM; |X| <= (3/2)|x|.
  GrowthConstants g;
  g.c1 = 1.5;
  g.c2 = 0.5;
  g.c3 = 0.0;
  g.nu = 0.5 * level_;
  // On the band sum q p > level - nu = level/2 and |x|^2 >= 2 sum q p, so
  // dH(X) = sum q p + |x|^2 >= 3 (level - nu).
  g.c5 = 1.5 * level_;
  g.c4 = 0.75;  // (3/2)|x| <= (3/4)(|x|^2 + 1)
  g.L = 0.0;
  // |grad H|^2 = |x|^2 >= 2 sum q p = 2 level on Sigma.
  g.inf_grad_sigma = std::sqrt(2.0 * level_);
  return g;
}

// ---------------------------------------------------------------------------
// radial bump and perturbed model

namespace {
// profile g(u) = (1 - u)^4 on u in [0, 1]
inline double prof(double u) { return std::pow(1.0 - u, 4); }
inline double prof1(double u) { return -4.0 * std::pow(1.0 - u, 3); }
inline double prof2(double u) { return 12.0 * (1.0 - u) * (1.0 - u); }
inline double prof3(double u) { return -24.0 * (1.0 - u); }
}  // namespace

double RadialBump::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = x - center;
  const double u = y.squaredNorm() / (width * width);
  if (u >= 1.0) return 0.0;
  return amplitude * prof(u);
}

Eigen::VectorXd RadialBump::gradient(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = x - center;
  const double w2 = width * width;
  const double u = y.squaredNorm() / w2;
  if (u >= 1.0) return Eigen::VectorXd::Zero(x.size());
  return (2.0 * amplitude * prof1(u) / w2) * y;
}

Eigen::MatrixXd RadialBump::hessian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = x - center;
  const double w2 = width * width;
  const double u = y.squaredNorm() / w2;
  if (u >= 1.0) return Eigen::MatrixXd::Zero(x.size(), x.size());
  Eigen::MatrixXd h =
      (2.0 * amplitude * prof1(u) / w2) *
      Eigen::MatrixXd::Identity(x.size(), x.size());
  h += (4.0 * amplitude * prof2(u) / (w2 * w2)) * (y * y.transpose());
  return h;
}

double RadialBump::d3_bound(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = x - center;
  const double w2 = width * width;
  const double u = y.squaredNorm() / w2;
  if (u >= 1.0) return 0.0;
  const double r = y.norm();
  return std::abs(amplitude) *
         (12.0 * std::abs(prof2(u)) * r / (w2 * w2) +
          8.0 * std::abs(prof3(u)) * r * r * r / (w2 * w2 * w2));
}

double RadialBump::c3_norm(std::uint64_t seed, int n_samples) const {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  double worst = std::abs(amplitude);  // value at the center
  const int dim = static_cast<int>(center.size());
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd dir = random_direction(dim, rng);
    const double r = width * std::sqrt(ur(rng));
    const Eigen::VectorXd x = center + r * dir;
    worst = std::max({worst, std::abs(value(x)), gradient(x).norm(),
                      hessian(x).operatorNorm(), d3_bound(x)});
  }
  return worst;
}

PerturbedModel::PerturbedModel(HamiltonianPtr base, RadialBump bump,
                               double scale)
    : base_(std::move(base)), bump_(std::move(bump)), scale_(scale) {
  if (!base_) throw std::invalid_argument("perturbed model needs a base");
}

double PerturbedModel::value(const Eigen::VectorXd& x) const {
  return base_->value(x) + scale_ * bump_.value(x);
}

Eigen::VectorXd PerturbedModel::gradient(const Eigen::VectorXd& x) const {
  return base_->gradient(x) + scale_ * bump_.gradient(x);
}

Eigen::MatrixXd PerturbedModel::hessian(const Eigen::VectorXd& x) const {
  return base_->hessian(x) + scale_ * bump_.hessian(x);
}

double PerturbedModel::d3_bound(const Eigen::VectorXd& x) const {
  return base_->d3_bound(x) + std::abs(scale_) * bump_.d3_bound(x);
}

bool PerturbationBall::admits(const RadialBump& h) const {
  if (theta <= 0) return false;
  if ((h.center.norm() + h.width) > k_radius) return false;  // support in K
  return h.c3_norm() < theta;
}

Eigen::VectorXd closest_point_on_sigma(const HamiltonianModel& h,
                                       const Eigen::VectorXd& x, double tol,
                                       int max_iter) {
  // Gradient retraction to reach the level set, then Lagrange-Newton on
  // y - x = lambda grad H(y), H(y) = 0.
  Eigen::VectorXd y = x;
  for (int i = 0; i < max_iter; ++i) {
    const double v = h.value(y);
    if (std::abs(v) < 1e-13) break;
    const Eigen::VectorXd g = h.gradient(y);
    const double g2 = g.squaredNorm();
    if (g2 < 1e-14) throw std::runtime_error("retraction hit a critical point");
    y -= (v / g2) * g;
  }
  const int d = static_cast<int>(x.size());
  double lambda = (y - x).dot(h.gradient(y)) / h.gradient(y).squaredNorm();
  for (int i = 0; i < max_iter; ++i) {
    const Eigen::VectorXd g = h.gradient(y);
    Eigen::VectorXd res(d + 1);
    res.head(d) = y - x - lambda * g;
    res(d) = h.value(y);
    if (res.norm() < tol) break;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + 1, d + 1);
    jac.topLeftCorner(d, d) =
        Eigen::MatrixXd::Identity(d, d) - lambda * h.hessian(y);
    jac.topRightCorner(d, 1) = -g;
    jac.bottomLeftCorner(1, d) = g.transpose();
    const Eigen::VectorXd step = jac.fullPivLu().solve(res);
    y -= step.head(d);
    lambda -= step(d);
  }
  return y;
}

}  // namespace rabi
