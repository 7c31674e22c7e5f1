#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "airsparse/spectral.hpp"
#include "airsparse/types.hpp"

namespace airsparse {

/// ADMM settings for the sparse coding problem
///   min_x 1/2 |sum_k d_k * x_k - s|^2 + lambda sum_k |x_k|_1.
struct SolverConfig {
  double lambda = 0.2;
  /// Initial penalty; 10 * lambda + 0.1 when unset.
  std::optional<double> rho0;
  bool adapt_rho = true;
  double mu = 10.0;   // residual ratio that triggers a penalty change
  double tau = 2.0;   // penalty scaling factor
  std::size_t max_iter = 500;
  double eps_abs = 1e-5;
  double eps_rel = 1e-4;

  double initial_rho() const { return rho0 ? *rho0 : 10.0 * lambda + 0.1; }
  void validate() const;
};

struct SolveReport {
  std::size_t iterations_run = 0;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  std::vector<double> rho_history;
  std::vector<double> functional_values;
  bool converged = false;
};

/// Elementwise sign(v) max(|v| - t, 0).
std::vector<double> soft_threshold(std::span<const double> v, double t);
void soft_threshold_inplace(std::span<double> v, double t);

/// sum_k d_k * x_k with circular convolution; atoms anchored at (0,0).
Image reconstruct(const Dictionary& dict, const CoefficientMaps& maps);

/// 1/2 |sum_k d_k * x_k - s|^2 + lambda sum_k |x_k|_1.
double csc_functional(const Dictionary& dict, const CoefficientMaps& maps, const Image& s, double lambda);

/// 1/2 |sum_k d_k * x_k - s|^2 only.
double data_fit(const Dictionary& dict, const CoefficientMaps& maps, const Image& s);

struct CscResult {
  CoefficientMaps maps;
  SolveReport report;
};

/// Sparse coder for a fixed dictionary and image size. The padded atom
/// spectra are computed once; `solve` is const and may be called
/// concurrently from several threads.
class CscSolver {
 public:
  CscSolver(const Dictionary& dict, std::size_t rows, std::size_t cols, SolverConfig config);

  /// Returns the thresholded ADMM variable, which carries exact zeros.
  CscResult solve(const Image& s, const CoefficientMaps* warm_start = nullptr) const;

  /// sum_k d_k * x_k using the cached atom spectra.
  Image reconstruct(const CoefficientMaps& maps) const;

  const SolverConfig& config() const noexcept { return config_; }
  std::size_t atom_count() const noexcept { return atoms_; }

 private:
  std::size_t atoms_;
  std::size_t rows_;
  std::size_t cols_;
  SolverConfig config_;
  RealFft2 fft_;
  std::vector<Complex> dhat_;      // atoms_ x spectrum_size, atom-major
  std::vector<double> dhat_norm2_;  // sum_k |dhat_k(w)|^2 per frequency
};

CscResult csc_solve(const Dictionary& dict, const Image& s, const SolverConfig& config,
                    const CoefficientMaps* warm_start = nullptr);

}  // namespace airsparse
