#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "rabi/hamiltonian.hpp"
#include "rabi/loop.hpp"

namespace rabi {

/// Deterministic radial-shell sampling: shells at |x| = 0, step, 2 step, ...
/// up to r_max, a fixed number of directions per shell, each shell drawing
/// from its own derived RNG stream so parallel evaluation stays reproducible.
struct SamplingPlan {
  double r_max = 50.0;
  double shell_step = 0.5;
  int dirs_per_shell = 200;
  std::uint64_t seed = 0;

  int shell_count() const {
    return static_cast<int>(r_max / shell_step) + 1;
  }
};

enum class CertStatus { verified, sampled_only, falsified };

std::string to_string(CertStatus s);

struct ConditionReport {
  CertStatus status = CertStatus::sampled_only;
  Eigen::VectorXd witness;  // worst-case sample point
  double slack = 0.0;       // smallest margin seen over the samples
};

/// Certified growth constants for an admissible Hamiltonian, together with
/// the uniform-family quantities derived from them. theta > 0 only when the
/// certificate was built for a perturbation ball over a compact set K.
struct AdmissibilityCertificate {
  std::string model;
  int half_dim = 0;

  double c1 = 0, c2 = 0, c3 = 0;          // growth of the global field
  double L = 0;                           // third-derivative decay
  double c4 = 0, c5 = 0, nu = 0;          // banded field
  double M = 0, h0 = 0, h1 = 0;           // uniform quadratic behavior
  double h1_prime = 0;                    // 1 + |c2 - c3| / c2
  double theta = 0;                       // perturbation radius over K
  double k_radius = 0;                    // radius of K (0 if unused)
  double inf_grad_sigma = 0;              // inf over Sigma of |grad H|

  ConditionReport h1_report, h2_report, h3_report;

  bool admissible() const {
    return h1_report.status != CertStatus::falsified &&
           h2_report.status != CertStatus::falsified &&
           h3_report.status != CertStatus::falsified;
  }
};

struct H1Result {
  double c1 = 0, c2 = 0, c3 = 0;
  ConditionReport report;
};
struct H2Result {
  double L = 0, M = 0, h0 = 0, h1 = 0;
  ConditionReport report;
};
struct H3Result {
  double c4 = 0, c5 = 0, nu = 0;
  ConditionReport report;
};

/// Certify |X+(x)| <= c1 (|x|+1) and dH(X+) >= c2 |x|^2 - c3 over the plan's
/// shells. Models with registered closed forms get their constants validated
/// and status "verified"; otherwise constants are fitted from the samples.
H1Result certify_h1(const HamiltonianModel& h, const SamplingPlan& plan);

/// Certify sup |D^3 H| |x| <= L and derive (M, h0, h1) for the family with
/// the given theta (0 for a bare model).
H2Result certify_h2(const HamiltonianModel& h, const SamplingPlan& plan,
                    double theta = 0.0);

/// Certify the banded Liouville field on H^{-1}((-nu, nu)).
H3Result certify_h3(const HamiltonianModel& h, const SamplingPlan& plan);

/// theta = (1/2) min{ nu, c5 / (c4 (sup_K |x|^2 + 1)) } for K the closed ball
/// of the given radius.
double theta_radius(const AdmissibilityCertificate& cert, double k_radius);

/// Full pipeline. If k_radius > 0, theta is computed and folded into the
/// uniform constants (M, h0, h1, effective c3 and banded constants) exactly
/// as the uniform-family argument dictates.
AdmissibilityCertificate certify_model(const HamiltonianModel& h,
                                       const SamplingPlan& plan,
                                       double k_radius = 0.0);

struct PoWindowResult {
  double radius = 0.0;
  bool vacuous = false;
  std::string status;  // evidence within the searched family, not a proof
};

/// Smallest ball radius containing the images of all orbits with action in
/// (0, window_n].
PoWindowResult po_window_check(const HamiltonianModel& h, double window_n,
                               const std::vector<LoopMultiplier>& orbit_set);

}  // namespace rabi
