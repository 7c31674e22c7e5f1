#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "airsparse/types.hpp"

namespace airsparse {

using Complex = std::complex<double>;

// DFT convention throughout: forward transform is unscaled,
//   X(u,v) = sum_{r,c} x(r,c) exp(-2 pi i (u r / H + v c / W)),
// and the inverse carries the 1/(H W) factor.

/// Full H x W spectrum of a 2D signal.
struct FreqImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> coeffs;

  Complex operator()(std::size_t r, std::size_t c) const { return coeffs[r * cols + c]; }
};

FreqImage fft2(const Image& image);
FreqImage fft2(std::size_t rows, std::size_t cols, std::span<const Complex> values);
std::vector<Complex> ifft2(const FreqImage& spectrum);
/// Real part of the inverse transform.
Image ifft2_real(const FreqImage& spectrum);

/// Half-spectrum real transform for fixed dims: rows x (cols/2 + 1) complex
/// coefficients. This is the packed form the solvers iterate on. Plans are
/// shared process-wide and immutable once built, so one instance may be used
/// from several threads.
class RealFft2 {
 public:
  RealFft2(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t half_cols() const noexcept { return cols_ / 2 + 1; }
  std::size_t spectrum_size() const noexcept { return rows_ * half_cols(); }
  std::size_t spatial_size() const noexcept { return rows_ * cols_; }

  void forward(std::span<const double> in, std::span<Complex> out) const;
  /// Includes the 1/(H W) scale.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

  /// Multiplicity of half-spectrum column `c` in the full spectrum (1 or 2);
  /// sum_full |X|^2 == sum_half weight(c) |X|^2.
  double column_weight(std::size_t c) const noexcept {
    return (c == 0 || (cols_ % 2 == 0 && c == cols_ / 2)) ? 1.0 : 2.0;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// Places an h x w atom at indices [0,h) x [0,w) of a zero rows x cols array.
std::vector<double> pad_atom(std::span<const double> atom, std::size_t atom_rows, std::size_t atom_cols,
                             std::size_t rows, std::size_t cols);

struct TikhonovSplit {
  Image lowpass;
  Image highpass;
  double lambda = 0.0;
};

/// Lowpass l minimizes 1/2 |l - s|^2 + lambda/2 (|G_r l|^2 + |G_c l|^2) with
/// periodic forward differences; highpass = s - l.
TikhonovSplit tikhonov_split(const Image& image, double lambda);

/// Solves (a a^H + rho I) x = b with a = conj(dhat) by Sherman-Morrison.
void solve_rank1_system(std::span<const Complex> dhat, double rho, std::span<const Complex> b,
                        std::span<Complex> x);
std::vector<Complex> solve_rank1_system(std::span<const Complex> dhat, double rho,
                                        std::span<const Complex> b);

/// Cholesky factor of a K x K Hermitian positive definite matrix, packed
/// row-wise lower triangle.
class HermitianCholesky {
 public:
  HermitianCholesky() = default;
  explicit HermitianCholesky(std::size_t k) : k_(k), lower_(k * (k + 1) / 2) {}

  std::size_t dim() const noexcept { return k_; }

  /// Factors `gram` + shift I. `gram` holds the upper triangle row-wise
  /// packed (entry (i,j), j >= i, at i*K - i(i-1)/2 + (j - i)).
  void factor(std::span<const Complex> gram_upper, double shift);
  void solve(std::span<const Complex> b, std::span<Complex> x) const;

  static std::size_t packed_index(std::size_t k, std::size_t i, std::size_t j) noexcept {
    return i * k - i * (i - 1) / 2 + (j - i);
  }

 private:
  std::size_t k_ = 0;
  std::vector<Complex> lower_;
};

/// Solves (sum_j a_j a_j^H + sigma I) d = b with a_j = conj(xhat_j), where
/// xhat_rows is J x K row-major.
std::vector<Complex> solve_hermitian_system(std::span<const Complex> xhat_rows, std::size_t j_count,
                                            double sigma, std::span<const Complex> b);

}  // namespace airsparse
