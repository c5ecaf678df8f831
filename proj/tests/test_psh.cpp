#include "doctest.h"

#include <cmath>

#include "rabi/ledger.hpp"
#include "rabi/psh.hpp"
#include "rabi/rng.hpp"
#include "test_support.hpp"

using namespace rabi;

namespace {

struct ZeroH : HamiltonianModel {
  std::string name() const override { return "zero"; }
  int half_dim() const override { return 1; }
  double value(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Zero(x.size());
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    return Eigen::MatrixXd::Zero(x.size(), x.size());
  }
  double d3_bound(const Eigen::VectorXd&) const override { return 0.0; }
};

BoundLedger sphere_ledger() {
  SamplingPlan plan;
  plan.dirs_per_shell = 64;
  plan.seed = 301;
  const AdmissibilityCertificate cert =
      certify_model(*rabitest::unit_sphere(), plan);
  return compute_ledger(cert, 0.0, 2 * M_PI, 1.0, 1.0, 1.0, 2.0, 2.0,
                        std::sqrt(2.0));
}

}  // namespace

TEST_CASE("the radial function is plurisubharmonic for J0") {
  // -dd^c F = omega0, checked through finite differences of dF o J0
  auto rng = make_rng(311);
  auto dcf = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    return (0.5 * x).dot(apply_j0(w));  // dF_x(J0 w)
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = random_vector(4, 1.5, rng);
    const Eigen::VectorXd u = random_vector(4, 1.0, rng);
    const Eigen::VectorXd w = random_vector(4, 1.0, rng);
    const double eps = 1e-6;
    const double ddc = (dcf(x + eps * u, w) - dcf(x - eps * u, w)) / (2 * eps) -
                       (dcf(x + eps * w, u) - dcf(x - eps * w, u)) / (2 * eps);
    CHECK(std::abs(-ddc - omega0(u, w)) < 1e-8);
  }
}

TEST_CASE("f1 and f2 closed forms") {
  auto sphere = rabitest::unit_sphere();
  auto rng = make_rng(312);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXd x = random_vector(2, 2.0, rng);
    const F12 f = f1_f2(*sphere, x);
    CHECK(f.f2 == doctest::Approx(-0.5 * x.squaredNorm()).epsilon(1e-12));
    CHECK(f.f1 == doctest::Approx(-2.0 * x.squaredNorm()).epsilon(1e-12));
  }
  // grad H(0) = 0 forces f2(0) = 0
  CHECK(f1_f2(*rabitest::hyperbola(), Eigen::VectorXd::Zero(2)).f2 == 0.0);
}

TEST_CASE("f1 matches an independent finite-difference assembly") {
  auto h = rabitest::hyperbola();
  auto rng = make_rng(313);
  auto df_xh = [&](const Eigen::VectorXd& x) {
    return (0.5 * x).dot(apply_j0(h->gradient(x)));  // dF(X^H)
  };
  auto dcf_xh = [&](const Eigen::VectorXd& x) {
    return -(h->gradient(x)).dot(0.5 * x);  // d^c F(X^H)
  };
  const double eps = 1e-5;
  auto fd_grad = [&](const std::function<double(const Eigen::VectorXd&)>& fn,
                     const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += eps;
      xm(i) -= eps;
      g(i) = (fn(xp) - fn(xm)) / (2 * eps);
    }
    return g;
  };
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd x = random_vector(2, 1.5, rng);
    const Eigen::VectorXd g_df = fd_grad(df_xh, x);
    const Eigen::VectorXd g_dcf = fd_grad(dcf_xh, x);
    const double term1 = g_df.dot(apply_j0(h->gradient(x)));
    const double f1_fd = term1 - h->gradient(x).squaredNorm() -
                         g_dcf.squaredNorm() - g_df.squaredNorm();
    CHECK(std::abs(f1_fd - f1_f2(*h, x).f1) < 1e-6 * std::max(1.0, std::abs(f1_fd)));
  }
}

TEST_CASE("alpha constants: plug-in values and branch switch") {
  const BoundLedger led = sphere_ledger();
  const AlphaConstants a = alpha_constants(led.cert);
  CHECK(a.a1 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(a.a2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.a3 == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(a.a4 == doctest::Approx(1.0).epsilon(1e-12));

  AdmissibilityCertificate big_h1 = led.cert;
  big_h1.h1 = 3.0 * big_h1.M;  // beyond the 2M switch of alpha2
  const AlphaConstants b = alpha_constants(big_h1);
  CHECK(b.a2 == doctest::Approx(big_h1.h1 * big_h1.h1 / (8.0 * big_h1.M))
                    .epsilon(1e-12));
}

TEST_CASE("alpha growth bounds hold at random points") {
  const BoundLedger led = sphere_ledger();
  auto rng = make_rng(314);
  for (auto h : {rabitest::unit_sphere(), rabitest::hyperbola()}) {
    for (int trial = 0; trial < 2000; ++trial) {
      const Eigen::VectorXd x = 12.0 * random_vector(2, 1.0, rng);
      const double s = x.norm() + 1.0;
      const F12 f = f1_f2(*h, x);
      CHECK(std::abs(f.f1) <= led.alpha1 * s * s + 1e-9);
      CHECK(std::abs(f.f2) <= led.alpha2 * s * s + 1e-9);
      CHECK(grad_f1_fd(*h, x).norm() <= led.alpha3 * s + 1e-5);
      CHECK(grad_f2_fd(*h, x).norm() <= led.alpha4 * s + 1e-5);
    }
  }
}

TEST_CASE("holomorphic cylinders are discretely subharmonic") {
  // v(s, t) = exp(2 pi (s + i t)) c solves the J0-holomorphic equation;
  // F o v must pass the patch inequality with f = 0
  HomotopySpec gamma;
  gamma.base = std::make_shared<ZeroH>();
  const int m = 41, n = 32;
  FloerTrajectory traj;
  traj.s_grid = Eigen::VectorXd::LinSpaced(m, -0.5, 0.5);
  for (int i = 0; i < m; ++i) {
    const double s = traj.s_grid(i);
    traj.states.push_back(
        {Loop::from_function(1, n,
                             [&](double t) {
                               Eigen::VectorXd x(2);
                               const double r = 0.4 * std::exp(2 * M_PI * s);
                               x << r * std::cos(2 * M_PI * t),
                                   r * std::sin(2 * M_PI * t);
                               return x;
                             }),
         0.0});
  }
  traj.stencil_order = 2;
  fill_trajectory_diagnostics(traj, gamma);

  BoundLedger led = sphere_ledger();
  EllipticAuditOptions opts;
  opts.v_bound = 10.0;
  const EllipticAudit audit = elliptic_audit(traj, gamma, 0.05, led, opts);
  REQUIRE(!audit.patches.empty());
  for (const auto& p : audit.patches) CHECK(p.inequality_ok);
}

TEST_CASE("k-infinity radius") {
  auto sphere = rabitest::unit_sphere();
  HomotopySpec gamma;
  gamma.base = sphere;
  BoundLedger led = sphere_ledger();

  CHECK(k_infinity_radius({}, gamma, led, led.eps) ==
        doctest::Approx(1.1 * std::max(led.v_radius, led.k_radius)));

  std::vector<FloerTrajectory> batch(1);
  Eigen::VectorXd p(2);
  p << std::sqrt(2.0), 0.0;
  batch[0].states.push_back({Loop::constant(p, 32), 0.0});
  batch[0].s_grid = Eigen::VectorXd::Zero(1);
  const double r = k_infinity_radius(batch, gamma, led, led.eps);
  CHECK(r == doctest::Approx(1.1 * 2.0));  // K radius still dominates

  BoundLedger far = led;
  far.v_radius = 6.0;
  CHECK(k_infinity_radius(batch, gamma, far, far.eps) ==
        doctest::Approx(1.1 * 6.0));
}
