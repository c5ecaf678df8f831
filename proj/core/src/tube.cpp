#include "rabi/tube.hpp"

#include <cmath>

#include "rabi/fourier.hpp"
#include "rabi/rng.hpp"

namespace rabi {

std::optional<TubeCoordinates> project(const HamiltonianModel& h,
                                       const LoopMultiplier& u,
                                       const ProjectOptions& opts) {
  const int d = u.loop.dim();
  const Eigen::VectorXd m = u.loop.mean();

  Eigen::VectorXd vbar;
  try {
    vbar = closest_point_on_sigma(h, m);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (std::abs(h.value(vbar)) > 1e-8) return std::nullopt;

  double lambda = (m - vbar).dot(h.gradient(vbar)) /
                  h.gradient(vbar).squaredNorm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd g = h.gradient(vbar);
    Eigen::VectorXd res(d + 1);
    res.head(d) = vbar + lambda * g - m;
    res(d) = h.value(vbar);
    if (res.norm() < opts.newton_tol) break;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + 1, d + 1);
    jac.topLeftCorner(d, d) =
        Eigen::MatrixXd::Identity(d, d) + lambda * h.hessian(vbar);
    jac.topRightCorner(d, 1) = g;
    jac.bottomLeftCorner(1, d) = g.transpose();
    const Eigen::VectorXd step = jac.fullPivLu().solve(res);
    if (!step.allFinite()) return std::nullopt;
    vbar -= step.head(d);
    lambda -= step(d);
  }
  const Eigen::VectorXd g = h.gradient(vbar);
  Eigen::VectorXd res(d + 1);
  res.head(d) = vbar + lambda * g - m;
  res(d) = h.value(vbar);
  if (res.norm() > 1e-8) return std::nullopt;

  TubeCoordinates tc;
  tc.base = vbar;
  tc.normal = {u.loop.samples().colwise() - vbar, u.eta};
  tc.radius = l2r_norm(tc.normal);
  return tc;
}

LoopMultiplier tube_chart(const Eigen::VectorXd& base,
                          const TangentVector& normal, int half_dim) {
  Eigen::MatrixXd s = normal.xi.colwise() + base;
  return {Loop(half_dim, std::move(s)), normal.sigma};
}

double dist_l2r_to_sigma(const HamiltonianModel& h, const LoopMultiplier& u) {
  const Eigen::VectorXd m = u.loop.mean();
  const Eigen::VectorXd vbar = closest_point_on_sigma(h, m);
  const double wiggle =
      l2_norm(Eigen::MatrixXd(u.loop.samples().colwise() - m));
  const double offset = (m - vbar).norm();
  return std::sqrt(wiggle * wiggle + offset * offset) + std::abs(u.eta);
}

double dist_w12_to_sigma(const HamiltonianModel& h, const LoopMultiplier& u) {
  return dist_l2r_to_sigma(h, u) + u.loop.derivative().l2_norm();
}

TaylorCheck taylor_remainder(const HamiltonianModel& h,
                             const LoopMultiplier& u, double m_const) {
  TaylorCheck out;
  const auto tc = project(h, u);
  if (!tc) return out;

  // gradient at the base vanishes (constant loop on Sigma), so the remainder
  // is grad A(u) - Hess A_(base,0)(normal)
  LoopMultiplier base{Loop::constant(tc->base, u.loop.n_samples()), 0.0};
  const TangentVector g = action_gradient(h, u);
  const TangentVector hw = hessian_apply(h, base, tc->normal);
  out.lhs = l2r_norm(g - hw);
  out.rhs_bound = 0.5 * m_const * tc->radius * tc->radius;
  out.pass = out.lhs <= out.rhs_bound + 1e-10;
  return out;
}

TangentVector make_normal_vector(const HamiltonianModel& h,
                                 const Eigen::VectorXd& vbar,
                                 const TangentVector& raw) {
  const Eigen::VectorXd g = h.gradient(vbar).normalized();
  const Eigen::VectorXd mean = raw.xi.rowwise().mean();
  TangentVector out = raw;
  // remove the tangential part of the loop mean, keep the grad H component
  out.xi.colwise() -= (mean - g.dot(mean) * g);
  return out;
}

FloorCheck hessian_normal_floor(const HamiltonianModel& h,
                                const Eigen::VectorXd& vbar,
                                const TangentVector& w) {
  FloorCheck out;
  const Eigen::VectorXd g = h.gradient(vbar);
  const Eigen::VectorXd mean = w.xi.rowwise().mean();
  const double tangential =
      (mean - g.normalized().dot(mean) * g.normalized()).norm();
  out.precondition_ok = g.norm() >= 0.5 && std::abs(h.value(vbar)) < 1e-8 &&
                        tangential < 1e-9 * std::max(1.0, mean.norm());
  if (!out.precondition_ok) return out;

  LoopMultiplier base{Loop::constant(vbar, static_cast<int>(w.xi.cols())), 0.0};
  out.lhs = l2r_norm(hessian_apply(h, base, w));
  out.floor = (w12_norm(w.xi) + std::abs(w.sigma)) / 6.0;
  out.pass = out.lhs >= out.floor - 1e-10;
  return out;
}

DriftAudit drift_audit(const HamiltonianModel& h,
                       const std::vector<LoopMultiplier>& segment,
                       double delta, double m_hat) {
  DriftAudit out;
  // collect tube data, then audit the longest run satisfying the hypotheses
  std::vector<std::optional<TubeCoordinates>> tubes;
  tubes.reserve(segment.size());
  for (const auto& u : segment) tubes.push_back(project(h, u));

  auto usable = [&](size_t i) {
    return tubes[i].has_value() && tubes[i]->radius < delta &&
           h.gradient(tubes[i]->base).norm() >= 0.5;
  };

  size_t best_lo = 0, best_len = 0;
  size_t i = 0;
  while (i < segment.size()) {
    if (!usable(i)) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < segment.size() && usable(j + 1)) ++j;
    if (j - i + 1 > best_len) {
      best_len = j - i + 1;
      best_lo = i;
    }
    i = j + 1;
  }
  if (best_len < 2) {
    out.note = "no in-tube subsegment of length >= 2";
    return out;
  }
  const size_t lo = best_lo, hi = best_lo + best_len - 1;
  out.applicable = true;
  out.first_node = static_cast<int>(lo);
  out.last_node = static_cast<int>(hi);
  if (best_len < segment.size())
    out.note = "audit restricted to the maximal in-tube subsegment";
  out.lhs = (tubes[hi]->base - tubes[lo]->base).norm();
  out.rhs = m_hat * std::abs(action(h, segment[hi]) - action(h, segment[lo]));
  out.pass = out.lhs <= out.rhs + 1e-10;
  return out;
}

InjectivityResult tube_injectivity_check(const HamiltonianModel& h,
                                         double delta, int n_samples,
                                         std::uint64_t seed) {
  InjectivityResult out;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  const int n = 32;
  for (int trial = 0; trial < n_samples; ++trial) {
    // random base point on Sigma via retraction of a random shell point
    const Eigen::VectorXd probe =
        3.0 * random_direction(h.dim(), rng) + random_vector(h.dim(), 0.3, rng);
    Eigen::VectorXd vbar;
    try {
      vbar = closest_point_on_sigma(h, probe);
    } catch (const std::exception&) {
      continue;
    }
    if (std::abs(h.value(vbar)) > 1e-9) continue;

    TangentVector normal = TangentVector::zero(h.dim(), n);
    if (trial % 2 == 0) {
      // straight along the gradient line, both signs: the first family to
      // break once delta exceeds the reach
      const Eigen::VectorXd g = h.gradient(vbar).normalized();
      normal.xi = (ur(rng) < 0 ? -1.0 : 1.0) * g.replicate(1, n);
    } else {
      normal = make_normal_vector(h, vbar, random_tangent(h.dim(), n, 4, 0.3, rng));
    }
    const double norm = l2r_norm(normal);
    if (norm < 1e-12) continue;
    const double target = 0.97 * delta * std::abs(ur(rng));
    normal = normal * (target / norm);

    const LoopMultiplier image = tube_chart(vbar, normal, h.half_dim());
    const auto back = project(h, image);
    if (!back) {
      out.pass = false;
      out.witness = "projection failed inside the declared tube radius";
      return out;
    }
    if ((back->base - vbar).norm() > 1e-6 * std::max(1.0, vbar.norm())) {
      out.pass = false;
      out.witness = "round trip moved the base point: chart not injective";
      return out;
    }
  }
  return out;
}

}  // namespace rabi
