#include "rabi/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rabi/action.hpp"
#include "rabi/parallel.hpp"
#include "rabi/rng.hpp"

namespace rabi {
namespace {

constexpr double kTol = 1e-9;

struct ShellSamples {
  std::vector<Eigen::VectorXd> points;
};

// Shell i draws from its own derived stream; the origin shell is a single
// point.
std::vector<ShellSamples> draw_shells(int dim, const SamplingPlan& plan) {
  const int n_shells = plan.shell_count();
  std::vector<ShellSamples> shells(static_cast<size_t>(n_shells));
  parallel_for(n_shells, [&](int i) {
    auto rng = make_rng(derive(plan.seed, static_cast<std::uint64_t>(i)));
    const double r = i * plan.shell_step;
    auto& out = shells[static_cast<size_t>(i)].points;
    if (i == 0) {
      out.push_back(Eigen::VectorXd::Zero(dim));
      return;
    }
    out.reserve(static_cast<size_t>(plan.dirs_per_shell));
    for (int k = 0; k < plan.dirs_per_shell; ++k)
      out.push_back(r * random_direction(dim, rng));
  });
  return shells;
}

void track_worst(ConditionReport& rep, double margin,
                 const Eigen::VectorXd& x, bool first) {
  if (first || margin < rep.slack) {
    rep.slack = margin;
    rep.witness = x;
  }
}

}  // namespace

std::string to_string(CertStatus s) {
  switch (s) {
    case CertStatus::verified:
      return "verified";
    case CertStatus::sampled_only:
      return "sampled-only";
    case CertStatus::falsified:
      return "falsified";
  }
  return "unknown";
}

H1Result certify_h1(const HamiltonianModel& h, const SamplingPlan& plan) {
  H1Result res;
  const auto shells = draw_shells(h.dim(), plan);
  const auto reg = h.registered_constants();

  if (reg) {
    res.c1 = reg->c1;
    res.c2 = reg->c2;
    res.c3 = reg->c3;
  } else {
    // Fit: c1 from the norm ratio, c2 from the outer-shell slope with a
    // safety factor, c3 as the smallest offset making the bound global.
    double c1 = 0.0;
    double slope = std::numeric_limits<double>::infinity();
    for (const auto& shell : shells) {
      for (const auto& x : shell.points) {
        const Eigen::VectorXd xd = h.liouville_global(x);
        c1 = std::max(c1, xd.norm() / (x.norm() + 1.0));
        if (x.norm() >= 0.8 * plan.r_max)
          slope = std::min(slope, h.gradient(x).dot(xd) / x.squaredNorm());
      }
    }
    res.c1 = c1;
    if (!std::isfinite(slope) || slope <= 1e-10) {
      res.report.status = CertStatus::falsified;
      res.report.witness = shells.back().points.front();
      return res;
    }
    res.c2 = 0.9 * slope;
    double c3 = 0.0;
    for (const auto& shell : shells)
      for (const auto& x : shell.points)
        c3 = std::max(c3, res.c2 * x.squaredNorm() -
                              h.gradient(x).dot(h.liouville_global(x)));
    res.c3 = c3;
  }

  bool first = true;
  bool ok = true;
  for (const auto& shell : shells) {
    for (const auto& x : shell.points) {
      const Eigen::VectorXd xd = h.liouville_global(x);
      const double m1 = res.c1 * (x.norm() + 1.0) - xd.norm();
      const double m2 =
          h.gradient(x).dot(xd) - (res.c2 * x.squaredNorm() - res.c3);
      const double margin = std::min(m1, m2);
      track_worst(res.report, margin, x, first);
      first = false;
      if (margin < -kTol) ok = false;
    }
  }
  if (!ok || res.c2 <= 0.0)
    res.report.status = CertStatus::falsified;
  else
    res.report.status = reg ? CertStatus::verified : CertStatus::sampled_only;
  return res;
}

H2Result certify_h2(const HamiltonianModel& h, const SamplingPlan& plan,
                    double theta) {
  H2Result res;
  const auto shells = draw_shells(h.dim(), plan);
  const auto reg = h.registered_constants();

  double inner = 0.0, outer = 0.0;
  Eigen::VectorXd worst = Eigen::VectorXd::Zero(h.dim());
  for (const auto& shell : shells) {
    for (const auto& x : shell.points) {
      const double g = h.d3_bound(x) * x.norm();
      if (x.norm() <= 0.5 * plan.r_max)
        inner = std::max(inner, g);
      else if (g > outer) {
        outer = g;
        worst = x;
      }
    }
  }

  if (reg) {
    res.L = reg->L;
    res.report.status = CertStatus::verified;
  } else {
    // Outer growth beyond the inner sup signals an unbounded product.
    if (outer > inner * 1.2 + 1e-9) {
      res.report.status = CertStatus::falsified;
      res.report.witness = worst;
      res.L = std::max(inner, outer);
      return res;
    }
    res.L = std::max(inner, outer);
    res.report.status = CertStatus::sampled_only;
  }

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(h.dim());
  res.M = theta + h.hessian(origin).operatorNorm() + res.L;
  res.h0 = theta + std::abs(h.value(origin));
  res.h1 = theta + h.gradient(origin).norm();

  // Validate the implied quadratic behavior.
  bool first = true;
  bool ok = true;
  for (const auto& shell : shells) {
    for (const auto& x : shell.points) {
      const double r = x.norm();
      const double m1 = res.M - h.hessian(x).operatorNorm();
      const double m2 = res.h1 + res.M * r - h.gradient(x).norm();
      const double m3 =
          res.h0 + res.h1 * r + 0.5 * res.M * r * r - std::abs(h.value(x));
      const double margin = std::min({m1, m2, m3});
      track_worst(res.report, margin, x, first);
      first = false;
      if (margin < -kTol * std::max(1.0, r * r)) ok = false;
    }
  }
  if (!ok) res.report.status = CertStatus::falsified;
  return res;
}

namespace {

// Points on the band |H| < nu along a ray, located by bisection towards
// prescribed strictly interior target values.
void band_points_on_ray(const HamiltonianModel& h, const Eigen::VectorXd& dir,
                        double nu, double r_max,
                        std::vector<Eigen::VectorXd>& out) {
  const int kScan = 400;
  double prev_r = 0.0;
  double prev_v = h.value(Eigen::VectorXd::Zero(h.dim()));
  const double targets[] = {-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9};
  for (int i = 1; i <= kScan; ++i) {
    const double r = r_max * i / kScan;
    const double v = h.value(r * dir);
    for (double tfrac : targets) {
      const double target = tfrac * nu;
      if ((prev_v - target) * (v - target) < 0.0) {
        double lo = prev_r, hi = r;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((h.value(mid * dir) - target) * (h.value(lo * dir) - target) <=
              0.0)
            hi = mid;
          else
            lo = mid;
        }
        const Eigen::VectorXd x = 0.5 * (lo + hi) * dir;
        if (std::abs(h.value(x)) < nu) out.push_back(x);
      }
    }
    prev_r = r;
    prev_v = v;
  }
}

}  // namespace

namespace {

// Newton search for critical points of H from a handful of seeds. A critical
// point inside the closed band rules out any positive c5.
bool critical_point_in_band(const HamiltonianModel& h, double nu,
                            Eigen::VectorXd* witness) {
  std::vector<Eigen::VectorXd> seeds;
  seeds.push_back(Eigen::VectorXd::Zero(h.dim()));
  for (int i = 0; i < h.dim(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(h.dim());
    e(i) = 1.0;
    seeds.push_back(e);
    seeds.push_back(-e);
  }
  for (auto x : seeds) {
    for (int it = 0; it < 50; ++it) {
      const Eigen::VectorXd g = h.gradient(x);
      if (g.norm() < 1e-11) break;
      const Eigen::MatrixXd hess = h.hessian(x);
      const Eigen::VectorXd step =
          hess.colPivHouseholderQr().solve(g);
      if (!step.allFinite() || step.norm() > 1e3) break;
      x -= step;
    }
    if (h.gradient(x).norm() < 1e-8 && std::abs(h.value(x)) < nu) {
      if (witness) *witness = x;
      return true;
    }
  }
  return false;
}

}  // namespace

H3Result certify_h3(const HamiltonianModel& h, const SamplingPlan& plan) {
  H3Result res;
  const auto reg = h.registered_constants();
  double nu = 0.0;
  if (reg) {
    nu = reg->nu;
  } else if (const auto* pert = dynamic_cast<const PerturbedModel*>(&h)) {
    if (auto base_reg = pert->base()->registered_constants())
      nu = 0.5 * base_reg->nu;  // half band survives a C^0-small perturbation
  }
  if (nu <= 0.0) nu = 0.5;

  Eigen::VectorXd crit;
  if (!reg && critical_point_in_band(h, nu, &crit)) {
    res.report.status = CertStatus::falsified;
    res.report.witness = crit;
    res.nu = nu;
    return res;
  }

  // Band points over the plan's directions.
  std::vector<std::vector<Eigen::VectorXd>> per_dir(
      static_cast<size_t>(plan.dirs_per_shell));
  parallel_for(plan.dirs_per_shell, [&](int k) {
    auto rng = make_rng(derive(plan.seed ^ 0x48334833ULL,
                               static_cast<std::uint64_t>(k)));
    const Eigen::VectorXd dir = random_direction(h.dim(), rng);
    band_points_on_ray(h, dir, nu, plan.r_max,
                       per_dir[static_cast<size_t>(k)]);
  });
  std::vector<Eigen::VectorXd> band;
  for (auto& v : per_dir)
    band.insert(band.end(), v.begin(), v.end());

  if (band.empty()) {
    res.report.status = CertStatus::falsified;
    res.nu = nu;
    return res;
  }

  double inf_dh = std::numeric_limits<double>::infinity();
  double c4_fit = 0.0;
  Eigen::VectorXd worst = band.front();
  for (const auto& x : band) {
    const Eigen::VectorXd xdd = h.liouville_local(x);
    const double dh = h.gradient(x).dot(xdd);
    if (dh < inf_dh) {
      inf_dh = dh;
      worst = x;
    }
    c4_fit = std::max(c4_fit, xdd.norm() / (x.squaredNorm() + 1.0));
  }

  if (reg) {
    res.c4 = reg->c4;
    res.c5 = reg->c5;
    res.nu = reg->nu;
  } else {
    if (inf_dh <= 1e-10) {
      res.report.status = CertStatus::falsified;
      res.report.witness = worst;
      res.nu = nu;
      return res;
    }
    res.c4 = c4_fit;
    res.c5 = 0.95 * inf_dh;
    res.nu = nu;
  }

  bool first = true;
  bool ok = true;
  for (const auto& x : band) {
    const Eigen::VectorXd xdd = h.liouville_local(x);
    const double m1 = res.c4 * (x.squaredNorm() + 1.0) - xdd.norm();
    const double m2 = h.gradient(x).dot(xdd) - res.c5;
    const double margin = std::min(m1, m2);
    track_worst(res.report, margin, x, first);
    first = false;
    if (margin < -kTol) ok = false;
  }
  if (!ok)
    res.report.status = CertStatus::falsified;
  else
    res.report.status = reg ? CertStatus::verified : CertStatus::sampled_only;
  return res;
}

double theta_radius(const AdmissibilityCertificate& cert, double k_radius) {
  const double cap = cert.c5 / (cert.c4 * (k_radius * k_radius + 1.0));
  return 0.5 * std::min(cert.nu, cap);
}

AdmissibilityCertificate certify_model(const HamiltonianModel& h,
                                       const SamplingPlan& plan,
                                       double k_radius) {
  AdmissibilityCertificate cert;
  cert.model = h.name();
  cert.half_dim = h.half_dim();
  cert.k_radius = k_radius;

  const H1Result h1 = certify_h1(h, plan);
  cert.c1 = h1.c1;
  cert.c2 = h1.c2;
  cert.c3 = h1.c3;
  cert.h1_report = h1.report;

  const H3Result h3 = certify_h3(h, plan);
  cert.c4 = h3.c4;
  cert.c5 = h3.c5;
  cert.nu = h3.nu;
  cert.h3_report = h3.report;

  double theta = 0.0;
  if (k_radius > 0.0 && cert.admissible()) {
    theta = theta_radius(cert, k_radius);
    // Uniform constants for the whole perturbed family over K.
    cert.c3 = cert.c3 + theta * cert.c1 * (k_radius + 1.0);
    cert.c5 = 0.5 * cert.c5;
    cert.nu = 0.5 * cert.nu;
  }
  cert.theta = theta;

  H2Result h2 = certify_h2(h, plan, theta);
  if (k_radius > 0.0) {
    // D^3 products of any member of the family gain at most theta sup_K |x|.
    h2.L += theta * k_radius;
    h2.M = theta + h.hessian(Eigen::VectorXd::Zero(h.dim())).operatorNorm() +
           h2.L;
  }
  cert.L = h2.L;
  cert.M = h2.M;
  cert.h0 = h2.h0;
  cert.h1 = h2.h1;
  cert.h2_report = h2.report;

  cert.h1_prime = cert.c2 > 0.0
                      ? 1.0 + std::abs(cert.c2 - cert.c3) / cert.c2
                      : std::numeric_limits<double>::infinity();

  if (const auto reg = h.registered_constants()) {
    cert.inf_grad_sigma = reg->inf_grad_sigma;
  } else {
    // Sampled floor of |grad H| over Sigma: retract shell points to Sigma.
    double inf_g = std::numeric_limits<double>::infinity();
    auto rng = make_rng(derive(plan.seed ^ 0x51617181ULL, 0));
    for (int k = 0; k < 256; ++k) {
      const Eigen::VectorXd dir = random_direction(h.dim(), rng);
      for (double r = plan.shell_step; r <= plan.r_max;
           r += std::max(1.0, plan.shell_step)) {
        const Eigen::VectorXd x = r * dir;
        if (std::abs(h.value(x)) < 0.5 * r * r + 10.0) {
          try {
            const Eigen::VectorXd y = closest_point_on_sigma(h, x);
            if (std::abs(h.value(y)) < 1e-8)
              inf_g = std::min(inf_g, h.gradient(y).norm());
          } catch (const std::exception&) {
          }
        }
      }
    }
    cert.inf_grad_sigma = std::isfinite(inf_g) ? inf_g : 0.0;
  }
  return cert;
}

PoWindowResult po_window_check(const HamiltonianModel& h, double window_n,
                               const std::vector<LoopMultiplier>& orbit_set) {
  PoWindowResult res;
  int used = 0;
  for (const auto& u : orbit_set) {
    const double a = action(h, u);
    if (std::abs(a) <= 0.0 || std::abs(a) > window_n) continue;
    ++used;
    res.radius = std::max(res.radius, u.loop.linf_norm());
  }
  res.vacuous = (used == 0);
  res.status = res.vacuous
                   ? "vacuous: no orbits with action in the window"
                   : "evidence within the searched orbit family, not a proof";
  return res;
}

}  // namespace rabi
