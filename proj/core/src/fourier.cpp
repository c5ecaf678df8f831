#include "rabi/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace rabi {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// FFTW plan creation is not thread-safe; execution on caller-owned buffers is.
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  fftw_plan fwd = nullptr;  // complex forward
  fftw_plan bwd = nullptr;  // complex backward
};

class PlanCache {
 public:
  PlanPair get(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(static_cast<size_t>(n));
    std::vector<fftw_complex> cplx(static_cast<size_t>(n + 1));
    PlanPair p;
    p.r2c = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    std::vector<fftw_complex> cin(static_cast<size_t>(n));
    p.fwd = fftw_plan_dft_1d(n, cin.data(), cplx.data(), FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_1d(n, cplx.data(), cin.data(), FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void check_n(int n) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("sample count must be even and >= 8");
}

}  // namespace

Eigen::MatrixXcd fft_rows(const Eigen::MatrixXd& samples) {
  const int n = static_cast<int>(samples.cols());
  check_n(n);
  const int rows = static_cast<int>(samples.rows());
  const int nk = n / 2 + 1;
  PlanPair plans = cache().get(n);

  Eigen::MatrixXcd modes(rows, nk);
  std::vector<double> real(static_cast<size_t>(n));
  std::vector<fftw_complex> cplx(static_cast<size_t>(nk));
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < n; ++j) real[static_cast<size_t>(j)] = samples(r, j);
    fftw_execute_dft_r2c(plans.r2c, real.data(), cplx.data());
    for (int k = 0; k < nk; ++k)
      modes(r, k) = std::complex<double>(cplx[static_cast<size_t>(k)][0],
                                         cplx[static_cast<size_t>(k)][1]) /
                    static_cast<double>(n);
  }
  return modes;
}

Eigen::MatrixXd ifft_rows(const Eigen::MatrixXcd& modes, int n_samples) {
  check_n(n_samples);
  const int nk = n_samples / 2 + 1;
  if (modes.cols() != nk)
    throw std::invalid_argument("mode count does not match sample count");
  const int rows = static_cast<int>(modes.rows());
  PlanPair plans = cache().get(n_samples);

  Eigen::MatrixXd samples(rows, n_samples);
  std::vector<double> real(static_cast<size_t>(n_samples));
  std::vector<fftw_complex> cplx(static_cast<size_t>(nk));
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < nk; ++k) {
      cplx[static_cast<size_t>(k)][0] = modes(r, k).real();
      cplx[static_cast<size_t>(k)][1] = modes(r, k).imag();
    }
    fftw_execute_dft_c2r(plans.c2r, cplx.data(), real.data());
    for (int j = 0; j < n_samples; ++j) samples(r, j) = real[static_cast<size_t>(j)];
  }
  return samples;
}

Eigen::MatrixXd spectral_derivative_rows(const Eigen::MatrixXd& samples) {
  const int n = static_cast<int>(samples.cols());
  Eigen::MatrixXcd modes = fft_rows(samples);
  const int nk = n / 2 + 1;
  for (int k = 0; k < nk; ++k) {
    const double w = (k == n / 2) ? 0.0 : kTwoPi * k;
    modes.col(k) *= std::complex<double>(0.0, w);
  }
  return ifft_rows(modes, n);
}

Eigen::MatrixXd spectral_second_derivative_rows(const Eigen::MatrixXd& samples) {
  const int n = static_cast<int>(samples.cols());
  Eigen::MatrixXcd modes = fft_rows(samples);
  const int nk = n / 2 + 1;
  for (int k = 0; k < nk; ++k) {
    const double w = kTwoPi * k;
    modes.col(k) *= -w * w;
  }
  return ifft_rows(modes, n);
}

Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& samples, int n_out) {
  const int n_in = static_cast<int>(samples.cols());
  check_n(n_out);
  if (n_out == n_in) return samples;
  if (n_out < n_in)
    throw std::invalid_argument("resample_rows only refines");
  Eigen::MatrixXcd modes = fft_rows(samples);
  Eigen::MatrixXcd padded =
      Eigen::MatrixXcd::Zero(samples.rows(), n_out / 2 + 1);
  padded.leftCols(modes.cols()) = modes;
  // The old Nyquist bin carries half the weight of an interior bin, so it is
  // halved when it becomes interior on the finer grid.
  padded.col(modes.cols() - 1) *= 0.5;
  return ifft_rows(padded, n_out);
}

Eigen::MatrixXcd fft_pairs(const Eigen::MatrixXd& samples) {
  const int n = static_cast<int>(samples.cols());
  check_n(n);
  if (samples.rows() % 2 != 0)
    throw std::invalid_argument("pair transform needs an even row count");
  const int pairs = static_cast<int>(samples.rows()) / 2;
  PlanPair plans = cache().get(n);

  Eigen::MatrixXcd modes(pairs, n);
  std::vector<fftw_complex> in(static_cast<size_t>(n));
  std::vector<fftw_complex> out(static_cast<size_t>(n));
  for (int b = 0; b < pairs; ++b) {
    for (int j = 0; j < n; ++j) {
      in[static_cast<size_t>(j)][0] = samples(2 * b, j);
      in[static_cast<size_t>(j)][1] = samples(2 * b + 1, j);
    }
    fftw_execute_dft(plans.fwd, in.data(), out.data());
    // forward bins are the exp(+2 pi i k t) synthesis coefficients up to 1/N
    for (int k = 0; k < n; ++k)
      modes(b, k) = std::complex<double>(out[static_cast<size_t>(k)][0],
                                         out[static_cast<size_t>(k)][1]) /
                    static_cast<double>(n);
  }
  return modes;
}

Eigen::MatrixXd ifft_pairs(const Eigen::MatrixXcd& modes) {
  const int n = static_cast<int>(modes.cols());
  check_n(n);
  const int pairs = static_cast<int>(modes.rows());
  PlanPair plans = cache().get(n);

  Eigen::MatrixXd samples(2 * pairs, n);
  std::vector<fftw_complex> in(static_cast<size_t>(n));
  std::vector<fftw_complex> out(static_cast<size_t>(n));
  for (int b = 0; b < pairs; ++b) {
    for (int k = 0; k < n; ++k) {
      in[static_cast<size_t>(k)][0] = modes(b, k).real();
      in[static_cast<size_t>(k)][1] = modes(b, k).imag();
    }
    fftw_execute_dft(plans.bwd, in.data(), out.data());
    for (int j = 0; j < n; ++j) {
      samples(2 * b, j) = out[static_cast<size_t>(j)][0];
      samples(2 * b + 1, j) = out[static_cast<size_t>(j)][1];
    }
  }
  return samples;
}

}  // namespace rabi
