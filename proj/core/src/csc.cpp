#include "airsparse/csc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airsparse/errors.hpp"

namespace airsparse {

void SolverConfig::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::argument, "lambda must be > 0");
  require(!rho0 || (*rho0 > 0.0 && std::isfinite(*rho0)), ErrorKind::argument, "rho0 must be > 0");
  require(mu > 1.0, ErrorKind::argument, "mu must be > 1");
  require(tau > 1.0, ErrorKind::argument, "tau must be > 1");
  require(max_iter > 0, ErrorKind::argument, "max_iter must be > 0");
  require(eps_abs >= 0.0 && eps_rel >= 0.0, ErrorKind::argument, "tolerances must be >= 0");
}

void soft_threshold_inplace(std::span<double> v, double t) {
  require(t >= 0.0, ErrorKind::argument, "soft threshold requires t >= 0");
  for (double& x : v) {
    const double mag = std::abs(x) - t;
    x = mag > 0.0 ? std::copysign(mag, x) : 0.0;
  }
}

std::vector<double> soft_threshold(std::span<const double> v, double t) {
  std::vector<double> out(v.begin(), v.end());
  soft_threshold_inplace(out, t);
  return out;
}

namespace {

void check_shapes(const Dictionary& dict, const CoefficientMaps& maps) {
  require(dict.count() == maps.count(), ErrorKind::argument, "atom count differs from map count");
  require(dict.atom_rows() <= maps.rows() && dict.atom_cols() <= maps.cols(), ErrorKind::argument,
          "atom support exceeds map dims");
}

std::vector<Complex> atom_spectra(const Dictionary& dict, const RealFft2& fft) {
  const std::size_t f = fft.spectrum_size();
  std::vector<Complex> out(dict.count() * f);
  for (std::size_t k = 0; k < dict.count(); ++k) {
    auto padded = pad_atom(dict.atom(k), dict.atom_rows(), dict.atom_cols(), fft.rows(), fft.cols());
    fft.forward(padded, std::span<Complex>(out).subspan(k * f, f));
  }
  return out;
}

}  // namespace

Image reconstruct(const Dictionary& dict, const CoefficientMaps& maps) {
  check_shapes(dict, maps);
  RealFft2 fft(maps.rows(), maps.cols());
  const std::size_t f = fft.spectrum_size();
  const auto dhat = atom_spectra(dict, fft);
  std::vector<Complex> sum(f, Complex{});
  std::vector<Complex> xhat(f);
  for (std::size_t k = 0; k < maps.count(); ++k) {
    fft.forward(maps.map(k), xhat);
    for (std::size_t w = 0; w < f; ++w) sum[w] += dhat[k * f + w] * xhat[w];
  }
  Image out(maps.rows(), maps.cols());
  fft.inverse(sum, out.data());
  return out;
}

double data_fit(const Dictionary& dict, const CoefficientMaps& maps, const Image& s) {
  require(s.rows() == maps.rows() && s.cols() == maps.cols(), ErrorKind::argument,
          "image dims differ from map dims");
  const Image recon = reconstruct(dict, maps);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = recon.data()[i] - s.data()[i];
    acc += e * e;
  }
  return 0.5 * acc;
}

double csc_functional(const Dictionary& dict, const CoefficientMaps& maps, const Image& s, double lambda) {
  double l1 = 0.0;
  for (double v : maps.data()) l1 += std::abs(v);
  return data_fit(dict, maps, s) + lambda * l1;
}

CscSolver::CscSolver(const Dictionary& dict, std::size_t rows, std::size_t cols, SolverConfig config)
    : atoms_(dict.count()), rows_(rows), cols_(cols), config_(std::move(config)), fft_(rows, cols) {
  config_.validate();
  require(atoms_ >= 1, ErrorKind::empty_dictionary, "dictionary has no atoms");
  require(dict.atom_rows() <= rows && dict.atom_cols() <= cols, ErrorKind::argument,
          "atom support exceeds image dims");
  dhat_ = atom_spectra(dict, fft_);
  const std::size_t f = fft_.spectrum_size();
  dhat_norm2_.assign(f, 0.0);
  for (std::size_t k = 0; k < atoms_; ++k)
    for (std::size_t w = 0; w < f; ++w) dhat_norm2_[w] += std::norm(dhat_[k * f + w]);
}

CscResult CscSolver::solve(const Image& s, const CoefficientMaps* warm_start) const {
  require(s.rows() == rows_ && s.cols() == cols_, ErrorKind::argument, "image dims differ from solver dims");
  for (double v : s.data()) require(std::isfinite(v), ErrorKind::argument, "image contains non-finite values");

  const std::size_t k_count = atoms_;
  const std::size_t plane = rows_ * cols_;
  const std::size_t f = fft_.spectrum_size();
  const std::size_t hc = fft_.half_cols();
  const std::size_t n = k_count * plane;
  const double lambda = config_.lambda;

  CscResult result{CoefficientMaps(k_count, rows_, cols_, lambda), {}};
  SolveReport& report = result.report;

  // Spatial iterates: x (quadratic step), y (thresholded, returned), u (scaled dual).
  std::vector<double> x(n, 0.0);
  std::vector<double> y(n, 0.0);
  std::vector<double> y_prev(n, 0.0);
  std::vector<double> u(n, 0.0);

  // Spectral iterates. u_hat tracks fft(u) through the linear dual update.
  std::vector<Complex> x_hat(k_count * f);
  std::vector<Complex> y_hat(k_count * f, Complex{});
  std::vector<Complex> u_hat(k_count * f, Complex{});
  std::vector<Complex> s_hat(f);
  std::vector<Complex> acc(f);
  fft_.forward(s.data(), s_hat);

  if (warm_start != nullptr) {
    require(warm_start->count() == k_count && warm_start->rows() == rows_ && warm_start->cols() == cols_,
            ErrorKind::argument, "warm start dims do not match the problem");
    std::copy(warm_start->data().begin(), warm_start->data().end(), y.begin());
    for (std::size_t k = 0; k < k_count; ++k)
      fft_.forward(std::span<const double>(y).subspan(k * plane, plane),
                   std::span<Complex>(y_hat).subspan(k * f, f));
  }

  double rho = config_.initial_rho();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double inv_plane = 1.0 / static_cast<double>(plane);

  for (std::size_t iter = 1; iter <= config_.max_iter; ++iter) {
    // x-update: per frequency (a a^H + rho I) x = conj(d) s + rho (y - u), a = conj(d).
    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t k = 0; k < k_count; ++k) {
      const Complex* d = dhat_.data() + k * f;
      const Complex* yh = y_hat.data() + k * f;
      const Complex* uh = u_hat.data() + k * f;
      Complex* b = x_hat.data() + k * f;
      for (std::size_t w = 0; w < f; ++w) {
        b[w] = std::conj(d[w]) * s_hat[w] + rho * (yh[w] - uh[w]);
        acc[w] += d[w] * b[w];
      }
    }
    for (std::size_t w = 0; w < f; ++w) acc[w] /= rho + dhat_norm2_[w];
    const double inv_rho = 1.0 / rho;
    for (std::size_t k = 0; k < k_count; ++k) {
      const Complex* d = dhat_.data() + k * f;
      Complex* b = x_hat.data() + k * f;
      for (std::size_t w = 0; w < f; ++w) b[w] = (b[w] - std::conj(d[w]) * acc[w]) * inv_rho;
      fft_.inverse(std::span<const Complex>(x_hat).subspan(k * f, f),
                   std::span<double>(x).subspan(k * plane, plane));
    }

    // y-update (prox of the l1 term) and dual ascent.
    y.swap(y_prev);
    const double threshold = lambda / rho;
    double r2 = 0.0, s2 = 0.0, x2 = 0.0, y2 = 0.0, u2 = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x[i] + u[i];
      const double mag = std::abs(v) - threshold;
      const double yi = mag > 0.0 ? std::copysign(mag, v) : 0.0;
      y[i] = yi;
      const double ui = u[i] + x[i] - yi;
      u[i] = ui;
      const double dr = x[i] - yi;
      const double ds = yi - y_prev[i];
      r2 += dr * dr;
      s2 += ds * ds;
      x2 += x[i] * x[i];
      y2 += yi * yi;
      u2 += ui * ui;
      l1 += std::abs(yi);
    }

    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t k = 0; k < k_count; ++k) {
      Complex* yh = y_hat.data() + k * f;
      fft_.forward(std::span<const double>(y).subspan(k * plane, plane), std::span<Complex>(yh, f));
      const Complex* xh = x_hat.data() + k * f;
      const Complex* d = dhat_.data() + k * f;
      Complex* uh = u_hat.data() + k * f;
      for (std::size_t w = 0; w < f; ++w) {
        uh[w] += xh[w] - yh[w];
        acc[w] += d[w] * yh[w];
      }
    }
    // Data term at y via Parseval over the half spectrum.
    double fit = 0.0;
    for (std::size_t w = 0; w < f; ++w) fit += fft_.column_weight(w % hc) * std::norm(acc[w] - s_hat[w]);
    const double functional = 0.5 * fit * inv_plane + lambda * l1;

    const double primal = std::sqrt(r2);
    const double dual = rho * std::sqrt(s2);
    report.iterations_run = iter;
    report.primal_residuals.push_back(primal);
    report.dual_residuals.push_back(dual);
    report.rho_history.push_back(rho);
    report.functional_values.push_back(functional);

    if (!std::isfinite(primal) || !std::isfinite(dual) || !std::isfinite(functional))
      fail(ErrorKind::numerical_divergence, "sparse coding diverged at iteration " + std::to_string(iter));

    const double eps_pri = sqrt_n * config_.eps_abs + config_.eps_rel * std::max(std::sqrt(x2), std::sqrt(y2));
    const double eps_dua = sqrt_n * config_.eps_abs + config_.eps_rel * rho * std::sqrt(u2);
    if (primal <= eps_pri && dual <= eps_dua) {
      report.converged = true;
      break;
    }

    if (config_.adapt_rho) {
      double scale = 1.0;
      if (primal > config_.mu * dual) {
        scale = config_.tau;
      } else if (dual > config_.mu * primal) {
        scale = 1.0 / config_.tau;
      }
      if (scale != 1.0) {
        rho *= scale;
        for (double& ui : u) ui /= scale;
        for (Complex& uh : u_hat) uh /= scale;
      }
    }
  }

  std::copy(y.begin(), y.end(), result.maps.data().begin());
  return result;
}

Image CscSolver::reconstruct(const CoefficientMaps& maps) const {
  require(maps.count() == atoms_ && maps.rows() == rows_ && maps.cols() == cols_, ErrorKind::argument,
          "maps do not match solver dims");
  const std::size_t f = fft_.spectrum_size();
  std::vector<Complex> sum(f, Complex{});
  std::vector<Complex> xhat(f);
  for (std::size_t k = 0; k < atoms_; ++k) {
    fft_.forward(maps.map(k), xhat);
    for (std::size_t w = 0; w < f; ++w) sum[w] += dhat_[k * f + w] * xhat[w];
  }
  Image out(rows_, cols_);
  fft_.inverse(sum, out.data());
  return out;
}

CscResult csc_solve(const Dictionary& dict, const Image& s, const SolverConfig& config,
                    const CoefficientMaps* warm_start) {
  return CscSolver(dict, s.rows(), s.cols(), config).solve(s, warm_start);
}

}  // namespace airsparse
