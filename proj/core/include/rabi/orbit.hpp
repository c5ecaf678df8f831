#pragma once

#include <optional>

#include "rabi/action.hpp"
#include "rabi/hamiltonian.hpp"
#include "rabi/loop.hpp"

namespace rabi {

/// A connected piece of the critical set: either a constant loop on Sigma
/// (eta = 0) or a nontrivial closed orbit with period eta.
struct CriticalComponent {
  enum class Kind { constant_on_sigma, nontrivial_orbit };
  Kind kind = Kind::constant_on_sigma;
  LoopMultiplier representative;
  double action_value = 0.0;
};

struct FindOrbitOptions {
  int max_iterations = 60;
  double grad_tol = 1e-9;       // convergence in the L2 x R gradient norm
  double blow_up_ceiling = 1e4; // L-infinity abort threshold
};

struct FindOrbitResult {
  std::optional<CriticalComponent> component;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::string message;
};

/// Damped Newton on F(v, eta) = (d_t v - eta X^H(v), mean H(v)) with the
/// spectral derivative and a complete-orthogonal least-squares step, which
/// picks the minimal-norm direction across the Morse-Bott kernel.
FindOrbitResult find_orbit(const HamiltonianModel& h, const LoopMultiplier& seed,
                           const FindOrbitOptions& opts = {});

}  // namespace rabi
