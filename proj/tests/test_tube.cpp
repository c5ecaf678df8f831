#include "doctest.h"

#include <cmath>

#include "rabi/floer.hpp"
#include "rabi/rng.hpp"
#include "rabi/tube.hpp"
#include "test_support.hpp"

using namespace rabi;

namespace {

// planar level set: reach is infinite
struct LinearH : HamiltonianModel {
  std::string name() const override { return "linear"; }
  int half_dim() const override { return 1; }
  double value(const Eigen::VectorXd& x) const override { return x(0) - 1.0; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    g(0) = 1.0;
    return g;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    return Eigen::MatrixXd::Zero(x.size(), x.size());
  }
  double d3_bound(const Eigen::VectorXd&) const override { return 0.0; }
};

const FloerTrajectory& solved_sphere_trajectory() {
  static BvpResult res = [] {
    HomotopySpec gamma;
    gamma.base = rabitest::unit_sphere();
    CriticalComponent lo;
    lo.kind = CriticalComponent::Kind::constant_on_sigma;
    Eigen::VectorXd p(2);
    p << std::sqrt(2.0), 0.0;
    lo.representative = {Loop::constant(p, 32), 0.0};
    CriticalComponent hi;
    hi.kind = CriticalComponent::Kind::nontrivial_orbit;
    hi.representative = {rabitest::circle_loop(std::sqrt(2.0), 1, 32),
                         2 * M_PI};
    SolveBvpOptions opts;
    opts.nodes = 200;
    opts.s_span = 7.5;
    opts.residual_tol = 1e-7;
    return solve_bvp(gamma, EndpointSpec::sigma(lo), EndpointSpec::fixed(hi),
                     opts);
  }();
  REQUIRE(res.converged);
  return res.trajectory;
}

}  // namespace

TEST_CASE("projection fixes points of Sigma x 0") {
  auto h = rabitest::unit_sphere();
  Eigen::VectorXd p(2);
  p << 0.0, -std::sqrt(2.0);
  LoopMultiplier u{Loop::constant(p, 32), 0.0};
  auto tc = project(*h, u);
  REQUIRE(tc.has_value());
  CHECK((tc->base - p).norm() < 1e-11);
  CHECK(tc->radius < 1e-11);
}

TEST_CASE("projection of radial and wiggly states") {
  auto h = rabitest::unit_sphere();
  Eigen::VectorXd dir(2);
  dir << 1.0, 0.0;
  // radially displaced constant loop
  LoopMultiplier u{Loop::constant(Eigen::VectorXd(1.1 * std::sqrt(2.0) * dir), 32),
                   0.0};
  auto tc = project(*h, u);
  REQUIRE(tc.has_value());
  CHECK((tc->base - std::sqrt(2.0) * dir).norm() < 1e-10);
  const Eigen::VectorXd mean = tc->normal.xi.rowwise().mean();
  CHECK(std::abs(mean.normalized().dot(dir)) > 1.0 - 1e-10);

  // cosine wiggle of amplitude rho about a point on Sigma: radius rho/sqrt(2)
  const double rho = 0.05;
  Eigen::VectorXd p(2);
  p << 0.0, std::sqrt(2.0);
  Loop v = Loop::from_function(1, 64, [&](double t) {
    Eigen::VectorXd x = p;
    x(0) += rho * std::cos(2 * M_PI * t);
    return x;
  });
  auto tc2 = project(*h, {v, 0.0});
  REQUIRE(tc2.has_value());
  CHECK((tc2->base - p).norm() < 1e-10);
  CHECK(tc2->radius == doctest::Approx(rho / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("taylor remainder sits under the quadratic bound") {
  auto h = rabitest::unit_sphere();
  const double m_const = 1.0;
  // exactly on Sigma: zero remainder
  Eigen::VectorXd p(2);
  p << std::sqrt(2.0), 0.0;
  TaylorCheck on = taylor_remainder(*h, {Loop::constant(p, 32), 0.0}, m_const);
  CHECK(on.pass);
  CHECK(on.lhs < 1e-11);

  auto rng = make_rng(81);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd dir = random_direction(2, rng);
    const Eigen::VectorXd vbar = std::sqrt(2.0) * dir;
    TangentVector raw = random_tangent(2, 32, 5, 0.05, rng);
    TangentVector normal = make_normal_vector(*h, vbar, raw);
    const double nn = l2r_norm(normal);
    if (nn < 1e-12) continue;
    normal = normal * (0.1 / nn);
    const LoopMultiplier u = tube_chart(vbar, normal, 1);
    TaylorCheck tc = taylor_remainder(*h, u, m_const);
    CHECK(tc.pass);
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("hessian floor on normal vectors") {
  auto h = rabitest::unit_sphere();
  Eigen::VectorXd vbar(2);
  vbar << std::sqrt(2.0), 0.0;

  // zero vector: trivially tight
  FloorCheck z = hessian_normal_floor(*h, vbar, TangentVector::zero(2, 32));
  CHECK(z.precondition_ok);
  CHECK(z.pass);

  // pure multiplier direction: lhs = |sigma| |grad H|
  TangentVector ws = TangentVector::zero(2, 32);
  ws.sigma = 0.7;
  FloorCheck fs = hessian_normal_floor(*h, vbar, ws);
  CHECK(fs.precondition_ok);
  CHECK(fs.lhs == doctest::Approx(0.7 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(fs.pass);

  // radial constant loop part
  TangentVector wr{(0.3 * vbar.normalized()).replicate(1, 32), 0.0};
  FloorCheck fr = hessian_normal_floor(*h, vbar, wr);
  CHECK(fr.precondition_ok);
  CHECK(fr.lhs == doctest::Approx(0.3 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(fr.pass);

  // random normal vectors
  auto rng = make_rng(82);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::VectorXd dir = random_direction(2, rng);
    const Eigen::VectorXd base = std::sqrt(2.0) * dir;
    TangentVector w =
        make_normal_vector(*h, base, random_tangent(2, 32, 6, 1.0, rng));
    FloorCheck fc = hessian_normal_floor(*h, base, w);
    REQUIRE(fc.precondition_ok);
    CHECK(fc.pass);
  }
}

TEST_CASE("hessian image of tube coordinates is normal at the base") {
  auto h = rabitest::unit_sphere();
  auto rng = make_rng(83);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd dir = random_direction(2, rng);
    const Eigen::VectorXd vbar = std::sqrt(2.0) * dir;
    TangentVector normal =
        make_normal_vector(*h, vbar, random_tangent(2, 32, 4, 0.03, rng));
    const LoopMultiplier u = tube_chart(vbar, normal, 1);
    const auto tc = project(*h, u);
    REQUIRE(tc.has_value());
    LoopMultiplier base{Loop::constant(tc->base, 32), 0.0};
    const TangentVector hw = hessian_apply(*h, base, tc->normal);
    // the loop-part mean must be parallel to grad H at the base
    const Eigen::VectorXd mean = hw.xi.rowwise().mean();
    const Eigen::VectorXd g = h->gradient(tc->base).normalized();
    const double tangential = (mean - g.dot(mean) * g).norm();
    CHECK(tangential < 1e-9 * std::max(1.0, mean.norm()));
  }
}

TEST_CASE("gradient dominates the tube radius below 1/(6M)") {
  auto h = rabitest::unit_sphere();
  auto rng = make_rng(84);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::VectorXd dir = random_direction(2, rng);
    const Eigen::VectorXd vbar = std::sqrt(2.0) * dir;
    TangentVector normal =
        make_normal_vector(*h, vbar, random_tangent(2, 32, 5, 1.0, rng));
    const double nn = l2r_norm(normal);
    if (nn < 1e-12) continue;
    std::uniform_real_distribution<double> ur(1e-4, 1.0 / 6.0);
    normal = normal * (ur(rng) / nn);
    const LoopMultiplier u = tube_chart(vbar, normal, 1);
    const double radius = l2r_norm(normal);
    CHECK(l2r_norm(action_gradient(*h, u)) >= radius / 12.0 - 1e-12);
  }
}

TEST_CASE("drift audit on the solved trajectory") {
  auto h = rabitest::unit_sphere();
  const FloerTrajectory& traj = solved_sphere_trajectory();
  const double delta = 0.15, m_hat = 72.0;

  DriftAudit audit = drift_audit(*h, traj.states, delta, m_hat);
  REQUIRE(audit.applicable);
  CHECK(audit.pass);
  CHECK(audit.lhs <= audit.rhs + 1e-10);
  // the trajectory leaves the tube eventually, so the audit is restricted
  CHECK(!audit.note.empty());

  // constant segment: both sides vanish
  std::vector<LoopMultiplier> constant(
      5, LoopMultiplier{traj.states.front().loop, traj.states.front().eta});
  DriftAudit c = drift_audit(*h, constant, delta, m_hat);
  REQUIRE(c.applicable);
  CHECK(c.lhs < 1e-9);
  CHECK(c.pass);
}

TEST_CASE("tube injectivity") {
  auto sphere = rabitest::unit_sphere();
  CHECK(tube_injectivity_check(*sphere, 0.1, 300).pass);
  // far past the reach of the sphere the chart must fail
  CHECK(!tube_injectivity_check(*sphere, 2.0, 300).pass);
  // planar level sets have infinite reach
  CHECK(tube_injectivity_check(LinearH{}, 5.0, 100).pass);
}
