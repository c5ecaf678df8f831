#include "doctest.h"

#include <cmath>

#include "rabi/ledger.hpp"
#include "rabi/rng.hpp"
#include "test_support.hpp"

using namespace rabi;

namespace {

SamplingPlan plan(std::uint64_t seed) {
  SamplingPlan p;
  p.dirs_per_shell = 64;
  p.seed = seed;
  return p;
}

const AdmissibilityCertificate& sphere_cert() {
  static AdmissibilityCertificate c =
      certify_model(*rabitest::unit_sphere(), plan(201));
  return c;
}

BoundLedger sphere_ledger(double a = 0.0, double b = 2 * M_PI) {
  return compute_ledger(sphere_cert(), a, b, 1.0, /*ng=*/1.0,
                        /*v_radius=*/1.0, /*k_radius=*/2.0, /*n_radius=*/2.0,
                        /*v3=*/std::sqrt(2.0));
}

}  // namespace

TEST_CASE("eta-action linearity constants for the sphere") {
  const Eps0Result r = compute_eps0_ctilde(sphere_cert());
  // oracle: the two proof inequalities reduce to v >= 1 and
  // v^2 - v - 3/2 >= 0, so v0 = (1 + sqrt(7)) / 2
  const double v0 = 0.5 * (1.0 + std::sqrt(7.0));
  CHECK(std::abs(r.v0 - v0) < 1e-9);
  CHECK(r.c_tilde == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(r.eps0 - 0.25 / v0) < 1e-9);

  // c5 -> infinity caps eps0 by the band half-width branch
  AdmissibilityCertificate big = sphere_cert();
  big.c5 = 1e9;
  const Eps0Result rb = compute_eps0_ctilde(big);
  CHECK(rb.eps0 <= 0.5 * big.nu);

  // doubling c4 doubles c_tilde when the second branch is active
  AdmissibilityCertificate c4big = sphere_cert();
  c4big.c4 = 40.0;
  const Eps0Result r1 = compute_eps0_ctilde(c4big);
  AdmissibilityCertificate c4big2 = c4big;
  c4big2.c4 = 80.0;
  const Eps0Result r2 = compute_eps0_ctilde(c4big2);
  CHECK(r2.c_tilde == doctest::Approx(2.0 * r1.c_tilde).epsilon(1e-6));
}

TEST_CASE("a-priori bounds plug-ins") {
  const AprioriBounds z = apriori_bounds(0, 0, 4.0, 0.1371, 1.0);
  CHECK(z.frak_y == doctest::Approx(8.0 * 4.0 / 7.0).epsilon(1e-14));
  CHECK(z.frak_a == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
  CHECK(z.frak_e == doctest::Approx(1.0 / 7.0).epsilon(1e-14));

  // shrinking the window: energy tends to (1/7) Jinf (max + 1)
  const double jinf = 1.3, mx = 2.0;
  const AprioriBounds tight = apriori_bounds(mx, mx, 4.0, 0.1371, jinf);
  CHECK(tight.frak_e == doctest::Approx(jinf * (mx + 1.0) / 7.0).epsilon(1e-13));

  const BoundLedger led = sphere_ledger();
  CHECK(led.frak_a == doctest::Approx((8 * 2 * M_PI + 1 + 2 * M_PI) / 7.0)
                          .epsilon(1e-13));
  CHECK(ledger_reproduces(led));
}

TEST_CASE("far-field thresholds") {
  // sphere at delta = 1: c2 / (2 M c1) = 1/2, so eps1 = 1/4
  const Eps1V1 r = eps1_v1(1.0, sphere_ledger().frak_a, sphere_cert());
  CHECK(r.eps1 == doctest::Approx(0.25).epsilon(1e-14));

  // monotone limits
  const Eps1V1 small = eps1_v1(1e-3, sphere_ledger().frak_a, sphere_cert());
  CHECK(small.eps1 < r.eps1);
  CHECK(small.v1 > r.v1);

  // the thresholds do what the lemma says, on the non-compact example:
  // far constant loops on Sigma slightly perturbed keep |eta|, |d_t v| <= delta
  auto hyp = rabitest::hyperbola();
  const AdmissibilityCertificate hc = certify_model(*hyp, plan(202));
  const AprioriBounds ab = apriori_bounds(0, 2 * M_PI,
                                          compute_eps0_ctilde(hc).c_tilde,
                                          compute_eps0_ctilde(hc).eps0, 1.0);
  const double delta = 0.5;
  const Eps1V1 far = eps1_v1(delta, ab.frak_a, hc);
  auto rng = make_rng(203);
  HomotopySpec gamma;
  gamma.base = hyp;
  int used = 0;
  for (int trial = 0; trial < 400 && used < 40; ++trial) {
    const double big_r = far.v1 * (1.1 + 0.5 * trial / 400.0);
    Eigen::VectorXd p(2);
    p << big_r, 1.0 / big_r;
    Loop v = random_loop(1, 64, 4, 1e-4, rng, p);
    std::uniform_real_distribution<double> ue(-0.2, 0.2);
    LoopMultiplier u{v, 1e-4 * ue(rng)};
    const TangentVector g = action_gradient(*hyp, u);
    if (l2r_norm(g) >= far.eps1) continue;
    if (std::abs(action(*hyp, u)) > ab.frak_a) continue;
    if (u.loop.l2_norm() < far.v1) continue;
    ++used;
    CHECK(std::abs(u.eta) <= delta);
    CHECK(u.loop.derivative().l2_norm() <= delta);
  }
  CHECK(used >= 30);
}

TEST_CASE("band collapse width and containment") {
  // sphere crossing oracle: r0 solves r^4 + r^2 - 2r - 2 = 0
  double lo = 1.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double val = std::pow(mid, 4) + mid * mid - 2 * mid - 2;
    (val < 0 ? lo : hi) = mid;
  }
  const double r0 = 0.5 * (lo + hi);
  const double floor = 2.0 / (r0 * r0 + 1.0);
  const double delta = 0.3;
  CHECK(mu_of_delta(delta, sphere_cert()) ==
        doctest::Approx(std::min(0.5, delta * floor)).epsilon(1e-9));

  // containment on both registered geometries
  for (auto h : {rabitest::unit_sphere(), rabitest::hyperbola()}) {
    const AdmissibilityCertificate cert = certify_model(*h, plan(204));
    const double mu = mu_of_delta(delta, cert);
    auto rng = make_rng(205);
    std::uniform_real_distribution<double> ur(-2.0 * delta, 2.0 * delta);
    int found = 0;
    for (int trial = 0; trial < 20000 && found < 1000; ++trial) {
      // aim near Sigma so the thin band is actually hit
      const Eigen::VectorXd probe = 4.0 * random_vector(2, 1.0, rng);
      Eigen::VectorXd x;
      try {
        x = closest_point_on_sigma(*h, probe) + ur(rng) * random_direction(2, rng);
      } catch (const std::exception&) {
        continue;
      }
      if (std::abs(h->value(x)) >= mu) continue;
      ++found;
      const Eigen::VectorXd y = closest_point_on_sigma(*h, x);
      CHECK((x - y).norm() < delta);
    }
    CHECK(found >= 500);
  }
}

TEST_CASE("ledger invariants and reproduction") {
  const BoundLedger led = sphere_ledger();
  CHECK(led.eps0 <= 0.5 * led.cert.c5);
  CHECK(led.k_max >= 1.0);
  CHECK(led.delta < std::min(led.ng, 1.0 / (6.0 * led.cert.M)));
  CHECK(led.m_hat == 72.0 * led.cert.M);
  CHECK(led.v4 >= led.v3);
  CHECK(led.eps < led.eps2_half);
  CHECK(ledger_reproduces(led));

  // overrides must stay inside the admissible windows
  LedgerOverrides bad;
  bad.delta = 10.0;
  CHECK_THROWS(compute_ledger(led.cert, led.a, led.b, 1.0, 1.0, 1.0, 2.0, 2.0,
                              led.v3, bad));
}

TEST_CASE("membership in the action-derivation set") {
  auto sphere = rabitest::unit_sphere();
  HomotopySpec gamma;
  gamma.base = sphere;
  const BoundLedger led = sphere_ledger();

  // critical points with bounded action and eta are in B for every eps
  LoopMultiplier orbit{rabitest::circle_loop(std::sqrt(2.0), 1, 64), 2 * M_PI};
  CHECK(in_b(gamma, orbit, led.frak_a, led.frak_y, 1e-12));

  Eigen::VectorXd p(2);
  p << std::sqrt(2.0), 0.0;
  LoopMultiplier flat{Loop::constant(p, 64), 0.0};
  CHECK(in_b(gamma, flat, led.frak_a, led.frak_y, 1e-12));

  // eta beyond frak_y is excluded
  LoopMultiplier big{flat.loop, led.frak_y + 1.0};
  CHECK(!in_b(gamma, big, led.frak_a, led.frak_y, led.eps));
}

TEST_CASE("partition of in-B states") {
  auto hyp = rabitest::hyperbola();
  HomotopySpec gamma;
  gamma.base = hyp;
  const AdmissibilityCertificate cert = certify_model(*hyp, plan(206));
  BoundLedger led = compute_ledger(cert, 0.0, 2 * M_PI, 1.0, 1.0, 1.0, 2.0,
                                   2.0, std::sqrt(2.0));

  // far constant loop on Sigma: u1 with zero distance
  const double big_r = led.v2_half * 2.0 + 10.0;
  Eigen::VectorXd p(2);
  p << big_r, 1.0 / big_r;
  LoopMultiplier far{Loop::constant(p, 64), 0.0};
  const PartitionResult u1 = partition(gamma, far, led, 0.5 * led.delta);
  CHECK(u1.cls == PartitionClass::u1);
  CHECK(u1.bounds_hold);
  CHECK(u1.dist_w12 < 1e-9);

  // small near-critical loop: k1 with the derivative cap
  Eigen::VectorXd q(2);
  q << 1.0, 1.0;
  LoopMultiplier small{Loop::constant(q, 64), 0.0};
  const PartitionResult k1 = partition(gamma, small, led, 0.5 * led.delta);
  CHECK(k1.cls == PartitionClass::k1);
  CHECK(k1.bounds_hold);

  // gradient violation: outside
  LoopMultiplier wild{rabitest::circle_loop(4.0, 3, 64), 0.3};
  const PartitionResult off = partition(gamma, wild, led, 0.5 * led.delta);
  CHECK(off.cls == PartitionClass::outside);
}

TEST_CASE("oscillation audit mechanics on a synthetic trajectory") {
  auto hyp = rabitest::hyperbola();
  HomotopySpec gamma;
  gamma.base = hyp;
  const AdmissibilityCertificate cert = certify_model(*hyp, plan(207));
  BoundLedger led = compute_ledger(cert, 0.0, 2 * M_PI, 1.0, 1.0, 1.0, 2.0,
                                   2.0, std::sqrt(2.0));
  led.v4 = 2.0;  // synthetic: shrink the core so the recursion has content
  led.delta = 0.1;

  const int n = 32;
  auto const_state = [&](double qq, double pp) {
    Eigen::VectorXd x(2);
    x << qq, pp;
    return LoopMultiplier{Loop::constant(x, n), 0.0};
  };
  FloerTrajectory traj;
  for (int i = 0; i < 4; ++i) traj.states.push_back(const_state(1.0, 1.0));
  for (int i = 0; i < 3; ++i)
    traj.states.push_back({rabitest::circle_loop(4.0, 2, n), 0.5});
  for (int i = 0; i < 3; ++i)
    traj.states.push_back(const_state(5.0, 0.2));
  traj.s_grid.resize(10);
  for (int i = 0; i < 10; ++i) traj.s_grid(i) = 0.1 * i;
  traj.stencil_order = 2;

  const OscillationAudit audit =
      oscillation_audit(traj, gamma, led, led.eps, led.delta);
  CHECK(audit.oscillations == 2);
  CHECK(audit.tau.size() == 3);
  CHECK(audit.dwell_outside_b == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(audit.gap_sum > 0.0);
  CHECK(audit.pass);
}

TEST_CASE("global bound audit on a tame trajectory") {
  auto sphere = rabitest::unit_sphere();
  HomotopySpec gamma;
  gamma.base = sphere;
  const BoundLedger led = sphere_ledger();

  FloerTrajectory traj;
  Eigen::VectorXd p(2);
  p << std::sqrt(2.0), 0.0;
  for (int i = 0; i < 8; ++i)
    traj.states.push_back({Loop::constant(p, 32), 0.0});
  traj.s_grid = Eigen::VectorXd::LinSpaced(8, 0.0, 0.7);
  traj.stencil_order = 2;
  fill_trajectory_diagnostics(traj, gamma);

  const GlobalBoundAudit audit = l2_global_bound(traj, led, led.eps);
  CHECK(audit.pass);
  CHECK(audit.slack_ratio > 10.0);

  const MonitorAudit monitors = bounds1_monitors(traj, gamma, led);
  CHECK(monitors.pass);
}
