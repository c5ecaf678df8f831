#pragma once

#include <Eigen/Dense>

namespace rabi {

/// Discrete Fourier analysis of real periodic signals sampled on the uniform
/// grid t_j = j/N. Each row of a sample matrix is one scalar channel.
///
/// Mode matrices use the half-spectrum layout of a real transform: column k
/// holds the coefficient of exp(2*pi*i*k*t) for k = 0..N/2, normalized so
/// that samples(j) = sum_k c_k * modes(k) * exp(2*pi*i*k*t_j) with c_0 = 1,
/// c_{N/2} = 1 and c_k = 2 Re(...) otherwise.
Eigen::MatrixXcd fft_rows(const Eigen::MatrixXd& samples);
Eigen::MatrixXd ifft_rows(const Eigen::MatrixXcd& modes, int n_samples);

/// Spectral time derivative, exact for trigonometric polynomials of degree
/// < N/2. The Nyquist mode is dropped (its derivative is not representable
/// as a real signal on the same grid).
Eigen::MatrixXd spectral_derivative_rows(const Eigen::MatrixXd& samples);

/// Spectral second time derivative (the Nyquist mode survives: even
/// derivatives of the top cosine stay on the grid).
Eigen::MatrixXd spectral_second_derivative_rows(const Eigen::MatrixXd& samples);

/// Trigonometric interpolation of the rows onto a finer uniform grid with
/// n_out >= n_in samples (zero-padding in mode space).
Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& samples, int n_out);

/// Complex-pair transform: rows (2b, 2b+1) of a real sample matrix are read
/// as the complex signal q + i p and expanded in exp(2*pi*i*k*t) for
/// k = 0..N-1 (negative frequencies wrapped), normalized by 1/N.
Eigen::MatrixXcd fft_pairs(const Eigen::MatrixXd& samples);
Eigen::MatrixXd ifft_pairs(const Eigen::MatrixXcd& modes);

/// Signed frequency of wrapped mode index k in an N-point transform.
inline int signed_mode(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace rabi
