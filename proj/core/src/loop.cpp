#include "rabi/loop.hpp"

#include <cmath>
#include <stdexcept>

#include "rabi/fourier.hpp"

namespace rabi {

Loop::Loop(int half_dim, Eigen::MatrixXd samples)
    : n_(half_dim), samples_(std::move(samples)) {
  if (n_ < 1) throw std::invalid_argument("half_dim must be positive");
  if (samples_.rows() != 2 * n_)
    throw std::invalid_argument("sample rows must equal 2n");
  const int n = static_cast<int>(samples_.cols());
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("loop needs an even number of samples >= 8");
  modes_ = fft_rows(samples_);
}

Loop Loop::constant(const Eigen::VectorXd& point, int n_samples) {
  if (point.size() % 2 != 0)
    throw std::invalid_argument("point dimension must be even");
  Eigen::MatrixXd s = point.replicate(1, n_samples);
  return Loop(static_cast<int>(point.size()) / 2, std::move(s));
}

Loop Loop::from_function(int half_dim, int n_samples,
                         const std::function<Eigen::VectorXd(double)>& f) {
  Eigen::MatrixXd s(2 * half_dim, n_samples);
  for (int j = 0; j < n_samples; ++j)
    s.col(j) = f(static_cast<double>(j) / n_samples);
  return Loop(half_dim, std::move(s));
}

Loop Loop::derivative() const {
  return Loop(n_, spectral_derivative_rows(samples_));
}

Loop Loop::time_reversed() const {
  const int n = n_samples();
  Eigen::MatrixXd s(samples_.rows(), n);
  for (int j = 0; j < n; ++j) s.col(j) = samples_.col((n - j) % n);
  return Loop(n_, std::move(s));
}

Loop Loop::resampled(int n_out) const {
  return Loop(n_, resample_rows(samples_, n_out));
}

double Loop::l2_norm() const { return rabi::l2_norm(samples_); }

double Loop::linf_norm() const {
  return samples_.colwise().norm().maxCoeff();
}

double l2_norm(const Eigen::MatrixXd& sampled_field) {
  return std::sqrt(sampled_field.squaredNorm() /
                   static_cast<double>(sampled_field.cols()));
}

double l2_norm(const TangentVector& w) { return l2_norm(w.xi); }

double l2r_norm(const TangentVector& w) {
  return l2_norm(w.xi) + std::abs(w.sigma);
}

double l2r_norm_quad(const TangentVector& w) {
  const double a = l2_norm(w.xi);
  return std::sqrt(a * a + w.sigma * w.sigma);
}

double w12_norm(const Loop& v) {
  return v.l2_norm() + v.derivative().l2_norm();
}

double w12_norm(const Eigen::MatrixXd& xi_samples) {
  return l2_norm(xi_samples) + l2_norm(spectral_derivative_rows(xi_samples));
}

double l2r_distance(const LoopMultiplier& a, const LoopMultiplier& b) {
  return l2_norm(a.loop.samples() - b.loop.samples()) + std::abs(a.eta - b.eta);
}

double l2r_inner(const TangentVector& a, const TangentVector& b) {
  return a.xi.cwiseProduct(b.xi).sum() / static_cast<double>(a.xi.cols()) +
         a.sigma * b.sigma;
}

TangentVector difference(const LoopMultiplier& a, const LoopMultiplier& b) {
  return {a.loop.samples() - b.loop.samples(), a.eta - b.eta};
}

}  // namespace rabi
