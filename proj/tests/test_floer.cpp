#include "doctest.h"

#include <cmath>

#include "rabi/floer.hpp"
#include "rabi/rng.hpp"
#include "test_support.hpp"

using namespace rabi;

namespace {

HomotopySpec constant_gamma(HamiltonianPtr h) {
  HomotopySpec g;
  g.base = std::move(h);
  return g;
}

CriticalComponent sigma_point_component(double angle, int n_samples) {
  CriticalComponent c;
  c.kind = CriticalComponent::Kind::constant_on_sigma;
  Eigen::VectorXd p(2);
  p << std::sqrt(2.0) * std::cos(angle), std::sqrt(2.0) * std::sin(angle);
  c.representative = {Loop::constant(p, n_samples), 0.0};
  c.action_value = 0.0;
  return c;
}

CriticalComponent orbit_component(int k, int n_samples) {
  CriticalComponent c;
  c.kind = CriticalComponent::Kind::nontrivial_orbit;
  c.representative = {rabitest::circle_loop(std::sqrt(2.0), k, n_samples),
                      2 * M_PI * k};
  c.action_value = 2 * M_PI * k;
  return c;
}

}  // namespace

TEST_CASE("novikov window formulas") {
  CHECK(novikov_window(0, 0) == std::pair<double, double>(-1.0, 1.0));
  CHECK(novikov_window(-3, 5) == std::pair<double, double>(-6.0, 10.0));
  CHECK(novikov_window(2, 2) == std::pair<double, double>(-1.0, 4.0));
}

TEST_CASE("homotopy condition") {
  // constant homotopy: zero slope, trivially satisfied
  HomotopySpec c = constant_gamma(rabitest::unit_sphere());
  CHECK(homotopy_condition(c, 4.0, 0.1371).ok);
  CHECK(homotopy_condition(c, 4.0, 0.1371).lhs == 0.0);

  // boundary case is strict
  HomotopySpec g = c;
  const double c_tilde = 4.0, eps0 = 0.1371459425887159;
  const double denom = 8.0 * (c_tilde + 1.0 / eps0);
  RadialBump bump{Eigen::VectorXd::Zero(2), 1.0, (1.0 / denom) / 1.5};
  g.bump = bump;
  CHECK(!homotopy_condition(g, c_tilde, eps0).ok);

  // small bump passes
  HomotopySpec s = c;
  RadialBump tiny{Eigen::VectorXd::Zero(2), 1.0, 1e-4};
  s.bump = tiny;
  CHECK(homotopy_condition(s, c_tilde, eps0).ok);
}

TEST_CASE("explorer holds critical points fixed") {
  auto gamma = constant_gamma(rabitest::unit_sphere());
  LoopMultiplier orbit{rabitest::circle_loop(std::sqrt(2.0), 1, 64), 2 * M_PI};
  ExploreOptions opts;
  opts.target_step = 1e-2;
  ExploreResult res = integrate_explore(gamma, orbit, 0.0, 0.5, 8, opts);
  CHECK(!res.aborted);
  CHECK(l2r_distance(res.trajectory.states.back(), orbit) < 1e-6);
  CHECK(res.trajectory.residual < 1e-6);
}

TEST_CASE("explorer increases the action and tracks the eta equation") {
  auto sphere = rabitest::unit_sphere();
  auto gamma = constant_gamma(sphere);
  // small perturbation off the simple orbit
  auto rng = make_rng(71);
  Eigen::MatrixXd s = rabitest::circle_loop(std::sqrt(2.0), 1, 64).samples();
  s += 0.01 * random_tangent(2, 64, 3, 1.0, rng).xi;
  LoopMultiplier u0{Loop(1, s), 2 * M_PI + 0.02};

  ExploreResult res = integrate_explore(gamma, u0, 0.0, 0.4, 8);
  CHECK(!res.aborted);
  const auto& a = res.trajectory.action_trace;
  for (int i = 1; i < a.size(); ++i) CHECK(a(i) >= a(i - 1) - 1e-10);

  // d_s eta = -mean H(v) along the flow
  const auto& traj = res.trajectory;
  for (int i = 1; i + 1 < traj.nodes(); ++i) {
    const double ds = traj.s_grid(i + 1) - traj.s_grid(i - 1);
    const double lhs = (traj.eta_trace(i + 1) - traj.eta_trace(i - 1)) / ds;
    const double rhs = -sphere->mean_value(traj.states[i].loop);
    CHECK(std::abs(lhs - rhs) < 5e-3);
  }
}

TEST_CASE("bvp: constant trajectory at a critical point") {
  auto gamma = constant_gamma(rabitest::unit_sphere());
  CriticalComponent c = sigma_point_component(0.3, 32);
  SolveBvpOptions opts;
  opts.nodes = 41;
  opts.s_span = 2.0;
  opts.ncg_warmup = 10;
  opts.max_outer = 20;
  BvpResult res = solve_bvp(gamma, EndpointSpec::sigma(c),
                            EndpointSpec::sigma(c), opts);
  CHECK(res.converged);
  CHECK(res.trajectory.residual < 1e-8);
  for (const auto& u : res.trajectory.states)
    CHECK(l2r_distance(u, c.representative) < 1e-6);
}

TEST_CASE("bvp: sigma to simple orbit carries the action from 0 to 2 pi") {
  auto gamma = constant_gamma(rabitest::unit_sphere());
  const int n = 32;
  SolveBvpOptions opts;
  opts.nodes = 200;
  opts.s_span = 7.5;
  opts.stencil_order = 6;
  opts.residual_tol = 1e-7;
  opts.max_outer = 50;
  BvpResult res =
      solve_bvp(gamma, EndpointSpec::sigma(sigma_point_component(0.0, n)),
                EndpointSpec::fixed(orbit_component(1, n)), opts);
  REQUIRE(res.converged);
  const auto& traj = res.trajectory;
  CHECK(traj.residual < 1e-7);
  CHECK(std::abs(traj.action_trace(0)) < 1e-4);
  CHECK(std::abs(traj.action_trace(traj.nodes() - 1) - 2 * M_PI) < 1e-4);
  CHECK(traj.endpoint_gap_lo < 5e-2);
  CHECK(traj.endpoint_gap_hi < 5e-2);

  // monotone action, slack at the residual scale
  for (int i = 1; i < traj.nodes(); ++i)
    CHECK(traj.action_trace(i) >=
          traj.action_trace(i - 1) - traj.residual * traj.step() - 1e-12);

  // energy identity over the whole span
  double energy = 0.0;
  const auto ds = path_s_derivative(traj.states, traj.step(),
                                    traj.stencil_order);
  for (int i = 0; i < traj.nodes(); ++i) {
    const double w = (i == 0 || i == traj.nodes() - 1) ? 0.5 : 1.0;
    energy += w * traj.step() * l2r_inner(ds[i], ds[i]);
  }
  const double gain =
      traj.action_trace(traj.nodes() - 1) - traj.action_trace(0);
  CHECK(std::abs(energy - gain) < 1e-6 * std::max(1.0, std::abs(gain)));
}

TEST_CASE("bvp under a small homotopy satisfies the smallness precheck") {
  auto sphere = rabitest::unit_sphere();
  HomotopySpec gamma;
  gamma.base = sphere;
  RadialBump bump{Eigen::VectorXd::Constant(2, 0.4), 0.8, 1e-4};
  gamma.bump = bump;
  CHECK(homotopy_condition(gamma, 4.0, 0.1371459425887159).ok);

  const int n = 32;
  // endpoint components of H1 = base + bump
  auto h1 = gamma.h_end();
  FindOrbitResult orbit1 =
      find_orbit(*h1, {rabitest::circle_loop(std::sqrt(2.0), 1, n), 2 * M_PI});
  REQUIRE(orbit1.converged);

  SolveBvpOptions opts;
  opts.nodes = 200;
  opts.s_span = 7.5;
  opts.max_outer = 40;
  opts.residual_tol = 1e-6;
  BvpResult res =
      solve_bvp(gamma, EndpointSpec::sigma(sigma_point_component(0.2, n)),
                EndpointSpec::fixed(*orbit1.component), opts);
  REQUIRE(res.converged);
  CHECK(res.trajectory.residual < 1e-6);
  // parametric derivative identity: d/ds A^{H_s}(u) =
  // |grad|^2_{g_J} + eta * mean(dbeta * bump)
  const auto& traj = res.trajectory;
  for (int i = 1; i + 1 < traj.nodes(); ++i) {
    const double lhs =
        (traj.action_trace(i + 1) - traj.action_trace(i - 1)) /
        (2.0 * traj.step());
    double mean_bump = 0.0;
    for (int j = 0; j < n; ++j)
      mean_bump += bump.value(traj.states[i].loop.samples().col(j));
    mean_bump /= n;
    const double rhs =
        traj.energy_density(i) +
        traj.eta_trace(i) *
            HomotopySpec::dbeta(traj.s_grid(i)) * mean_bump;
    CHECK(std::abs(lhs - rhs) < 5e-3 * std::max(1.0, std::abs(rhs)));
  }
}
