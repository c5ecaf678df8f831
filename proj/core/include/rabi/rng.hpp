#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "rabi/loop.hpp"

namespace rabi {

/// Deterministic RNG plumbing. Every sampler takes an explicit seed and
/// derives sub-streams with derive(), so parallel execution order never
/// changes the draws.
inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step over the combined word
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Eigen::VectorXd random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = g(rng);
  const double norm = v.norm();
  return norm > 0 ? Eigen::VectorXd(v / norm) : random_direction(dim, rng);
}

inline Eigen::VectorXd random_vector(int dim, double scale,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = g(rng);
  return v;
}

/// Band-limited random loop: modes up to max_mode with geometrically decaying
/// amplitudes around the given center point. Keeping max_mode well below N/2
/// makes the spectral calculus on these loops exact to rounding.
inline Loop random_loop(int half_dim, int n_samples, int max_mode,
                        double amplitude, std::mt19937_64& rng,
                        const Eigen::VectorXd& center) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd s = center.replicate(1, n_samples);
  for (int k = 1; k <= max_mode; ++k) {
    const double a = amplitude / (1.0 + k * k);
    for (int r = 0; r < 2 * half_dim; ++r) {
      const double c = a * g(rng);
      const double d = a * g(rng);
      for (int j = 0; j < n_samples; ++j) {
        const double t = static_cast<double>(j) / n_samples;
        s(r, j) += c * std::cos(2.0 * M_PI * k * t) +
                   d * std::sin(2.0 * M_PI * k * t);
      }
    }
  }
  return Loop(half_dim, std::move(s));
}

inline TangentVector random_tangent(int dim, int n_samples, int max_mode,
                                    double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(dim, n_samples);
  for (int r = 0; r < dim; ++r) {
    xi.row(r).setConstant(amplitude * g(rng));
    for (int k = 1; k <= max_mode; ++k) {
      const double a = amplitude / (1.0 + k * k);
      const double c = a * g(rng);
      const double d = a * g(rng);
      for (int j = 0; j < n_samples; ++j) {
        const double t = static_cast<double>(j) / n_samples;
        xi(r, j) += c * std::cos(2.0 * M_PI * k * t) +
                    d * std::sin(2.0 * M_PI * k * t);
      }
    }
  }
  return {xi, amplitude * g(rng)};
}

}  // namespace rabi
