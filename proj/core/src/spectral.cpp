#include "airsparse/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "airsparse/errors.hpp"

namespace airsparse {
namespace {

enum class PlanKind { complex_forward, complex_inverse, real_forward, real_inverse };

// FFTW's planner is not thread-safe; executing an existing plan on fresh
// arrays is. Plans are built once under a lock and kept for the process
// lifetime. FFTW_ESTIMATE keeps plan selection independent of timing, so
// results are bitwise reproducible run to run.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, std::size_t rows, std::size_t cols) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, rows, cols);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const std::size_t half = rows * (cols / 2 + 1);
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::complex_forward:
      case PlanKind::complex_inverse: {
        auto* in = fftw_alloc_complex(rows * cols);
        auto* out = fftw_alloc_complex(rows * cols);
        plan = fftw_plan_dft_2d(r, c, in, out, kind == PlanKind::complex_forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::real_forward: {
        auto* in = fftw_alloc_real(rows * cols);
        auto* out = fftw_alloc_complex(half);
        plan = fftw_plan_dft_r2c_2d(r, c, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::real_inverse: {
        auto* in = fftw_alloc_complex(half);
        auto* out = fftw_alloc_real(rows * cols);
        plan = fftw_plan_dft_c2r_2d(r, c, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    require(plan != nullptr, ErrorKind::argument, "FFTW could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<PlanKind, std::size_t, std::size_t>, fftw_plan> plans_;
};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

void check_dims(std::size_t rows, std::size_t cols) {
  require(rows >= 1 && cols >= 1, ErrorKind::argument, "transform dims must be >= 1");
}

}  // namespace

FreqImage fft2(std::size_t rows, std::size_t cols, std::span<const Complex> values) {
  check_dims(rows, cols);
  require(values.size() == rows * cols, ErrorKind::argument, "fft2 input size does not match dims");
  FreqImage out{rows, cols, std::vector<Complex>(rows * cols)};
  std::vector<Complex> in(values.begin(), values.end());
  fftw_execute_dft(PlanCache::instance().get(PlanKind::complex_forward, rows, cols), as_fftw(in.data()),
                   as_fftw(out.coeffs.data()));
  return out;
}

FreqImage fft2(const Image& image) {
  std::vector<Complex> values(image.data().begin(), image.data().end());
  return fft2(image.rows(), image.cols(), values);
}

std::vector<Complex> ifft2(const FreqImage& spectrum) {
  check_dims(spectrum.rows, spectrum.cols);
  require(spectrum.coeffs.size() == spectrum.rows * spectrum.cols, ErrorKind::argument,
          "spectrum size does not match dims");
  std::vector<Complex> in = spectrum.coeffs;
  std::vector<Complex> out(in.size());
  fftw_execute_dft(PlanCache::instance().get(PlanKind::complex_inverse, spectrum.rows, spectrum.cols),
                   as_fftw(in.data()), as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

Image ifft2_real(const FreqImage& spectrum) {
  auto values = ifft2(spectrum);
  Image out(spectrum.rows, spectrum.cols);
  std::transform(values.begin(), values.end(), out.data().begin(), [](Complex v) { return v.real(); });
  return out;
}

RealFft2::RealFft2(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  check_dims(rows, cols);
  forward_plan_ = PlanCache::instance().get(PlanKind::real_forward, rows, cols);
  inverse_plan_ = PlanCache::instance().get(PlanKind::real_inverse, rows, cols);
}

void RealFft2::forward(std::span<const double> in, std::span<Complex> out) const {
  require(in.size() == spatial_size() && out.size() == spectrum_size(), ErrorKind::argument,
          "RealFft2::forward size mismatch");
  // Out-of-place r2c leaves its input untouched.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       as_fftw(out.data()));
}

void RealFft2::inverse(std::span<const Complex> in, std::span<double> out) const {
  require(in.size() == spectrum_size() && out.size() == spatial_size(), ErrorKind::argument,
          "RealFft2::inverse size mismatch");
  // c2r overwrites its input.
  thread_local std::vector<Complex> scratch;
  scratch.assign(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), as_fftw(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(spatial_size());
  for (double& v : out) v *= scale;
}

std::vector<double> pad_atom(std::span<const double> atom, std::size_t atom_rows, std::size_t atom_cols,
                             std::size_t rows, std::size_t cols) {
  require(atom_rows <= rows && atom_cols <= cols, ErrorKind::argument, "atom support exceeds image dims");
  std::vector<double> padded(rows * cols, 0.0);
  for (std::size_t r = 0; r < atom_rows; ++r)
    std::copy_n(atom.begin() + static_cast<std::ptrdiff_t>(r * atom_cols), atom_cols,
                padded.begin() + static_cast<std::ptrdiff_t>(r * cols));
  return padded;
}

TikhonovSplit tikhonov_split(const Image& image, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::argument, "tikhonov lambda must be >= 0");
  for (double v : image.data()) require(std::isfinite(v), ErrorKind::argument, "image contains non-finite values");

  const std::size_t rows = image.rows();
  const std::size_t cols = image.cols();
  TikhonovSplit split{Image(rows, cols), Image(rows, cols), lambda};
  if (lambda == 0.0) {
    split.lowpass = image;
    return split;
  }

  RealFft2 fft(rows, cols);
  std::vector<Complex> spectrum(fft.spectrum_size());
  fft.forward(image.data(), spectrum);

  // |G(w)|^2 = 4 sin^2(pi w / n) for a periodic forward difference.
  std::vector<double> row_gain(rows);
  std::vector<double> col_gain(fft.half_cols());
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(rows));
    row_gain[r] = 4.0 * s * s;
  }
  for (std::size_t c = 0; c < col_gain.size(); ++c) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(c) / static_cast<double>(cols));
    col_gain[c] = 4.0 * s * s;
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < col_gain.size(); ++c)
      spectrum[r * col_gain.size() + c] /= 1.0 + lambda * (row_gain[r] + col_gain[c]);

  fft.inverse(spectrum, split.lowpass.data());
  auto in = image.data();
  auto low = split.lowpass.data();
  auto high = split.highpass.data();
  for (std::size_t i = 0; i < in.size(); ++i) high[i] = in[i] - low[i];
  return split;
}

void solve_rank1_system(std::span<const Complex> dhat, double rho, std::span<const Complex> b,
                        std::span<Complex> x) {
  require(rho > 0.0, ErrorKind::argument, "rho must be positive");
  require(b.size() == dhat.size() && x.size() == dhat.size(), ErrorKind::argument,
          "rank-one system size mismatch");
  // a = conj(dhat): a^H b = sum dhat_k b_k, a^H a = sum |dhat_k|^2.
  Complex ahb{0.0, 0.0};
  double aha = 0.0;
  for (std::size_t k = 0; k < dhat.size(); ++k) {
    ahb += dhat[k] * b[k];
    aha += std::norm(dhat[k]);
  }
  const Complex coef = ahb / (rho + aha);
  for (std::size_t k = 0; k < dhat.size(); ++k) x[k] = (b[k] - std::conj(dhat[k]) * coef) / rho;
}

std::vector<Complex> solve_rank1_system(std::span<const Complex> dhat, double rho, std::span<const Complex> b) {
  std::vector<Complex> x(dhat.size());
  solve_rank1_system(dhat, rho, b, x);
  return x;
}

void HermitianCholesky::factor(std::span<const Complex> gram_upper, double shift) {
  const std::size_t k = k_;
  require(gram_upper.size() == k * (k + 1) / 2, ErrorKind::argument, "packed Gram size mismatch");
  auto lower = [&](std::size_t i, std::size_t j) -> Complex& { return lower_[i * (i + 1) / 2 + j]; };
  for (std::size_t j = 0; j < k; ++j) {
    double diag = gram_upper[packed_index(k, j, j)].real() + shift;
    for (std::size_t t = 0; t < j; ++t) diag -= std::norm(lower(j, t));
    if (!(diag > 0.0)) fail(ErrorKind::numerical_divergence, "Hermitian system is not positive definite");
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      Complex v = std::conj(gram_upper[packed_index(k, j, i)]);
      for (std::size_t t = 0; t < j; ++t) v -= lower(i, t) * std::conj(lower(j, t));
      lower(i, j) = v / ljj;
    }
  }
}

void HermitianCholesky::solve(std::span<const Complex> b, std::span<Complex> x) const {
  const std::size_t k = k_;
  auto lower = [&](std::size_t i, std::size_t j) { return lower_[i * (i + 1) / 2 + j]; };
  for (std::size_t i = 0; i < k; ++i) {
    Complex v = b[i];
    for (std::size_t t = 0; t < i; ++t) v -= lower(i, t) * x[t];
    x[i] = v / lower(i, i).real();
  }
  for (std::size_t ii = k; ii-- > 0;) {
    Complex v = x[ii];
    for (std::size_t t = ii + 1; t < k; ++t) v -= std::conj(lower(t, ii)) * x[t];
    x[ii] = v / lower(ii, ii).real();
  }
}

std::vector<Complex> solve_hermitian_system(std::span<const Complex> xhat_rows, std::size_t j_count, double sigma,
                                            std::span<const Complex> b) {
  require(sigma > 0.0, ErrorKind::argument, "sigma must be positive");
  require(j_count >= 1, ErrorKind::argument, "at least one row is required");
  const std::size_t k = b.size();
  require(xhat_rows.size() == j_count * k, ErrorKind::argument, "Hermitian system size mismatch");

  // Gram = sum_j conj(x_j) x_j^T.
  std::vector<Complex> gram(k * (k + 1) / 2, Complex{});
  for (std::size_t j = 0; j < j_count; ++j) {
    auto row = xhat_rows.subspan(j * k, k);
    for (std::size_t p = 0; p < k; ++p) {
      const Complex cp = std::conj(row[p]);
      Complex* dst = gram.data() + HermitianCholesky::packed_index(k, p, p);
      for (std::size_t q = p; q < k; ++q) dst[q - p] += cp * row[q];
    }
  }
  HermitianCholesky chol(k);
  chol.factor(gram, sigma);
  std::vector<Complex> x(k);
  chol.solve(b, x);
  return x;
}

}  // namespace airsparse
