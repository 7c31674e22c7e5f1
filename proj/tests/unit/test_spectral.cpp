#include <cmath>
#include <random>

#include "airsparse/spectral.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace airsparse;
using namespace airsparse::testing;

namespace {

std::vector<Complex> random_complex(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<Complex> v(n);
  for (auto& z : v) z = {normal(gen), normal(gen)};
  return v;
}

double norm(const std::vector<Complex>& v) {
  double acc = 0.0;
  for (const auto& z : v) acc += std::norm(z);
  return std::sqrt(acc);
}

// Dense row-major (a a^H + rho I) with a = conj(dhat).
std::vector<Complex> rank1_matrix(const std::vector<Complex>& dhat, double rho) {
  const std::size_t k = dhat.size();
  std::vector<Complex> m(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m[i * k + j] = std::conj(dhat[i]) * dhat[j] + (i == j ? rho : 0.0);
  return m;
}

std::vector<Complex> gram_matrix(const std::vector<Complex>& rows, std::size_t j_count, std::size_t k, double sigma) {
  std::vector<Complex> m(k * k);
  for (std::size_t j = 0; j < j_count; ++j)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = 0; q < k; ++q) m[p * k + q] += std::conj(rows[j * k + p]) * rows[j * k + q];
  for (std::size_t p = 0; p < k; ++p) m[p * k + p] += sigma;
  return m;
}

std::vector<Complex> matvec(const std::vector<Complex>& m, const std::vector<Complex>& x) {
  const std::size_t k = x.size();
  std::vector<Complex> y(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) y[i] += m[i * k + j] * x[j];
  return y;
}

double relative_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm(d) / norm(b);
}

double max_abs_diff(const Image& a, const Image& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

double mean(const Image& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("delta has an all-ones spectrum and a constant is DC only") {
  Image delta(6, 5);
  delta(0, 0) = 1.0;
  const FreqImage d = fft2(delta);
  for (const Complex& z : d.coeffs) CHECK(std::abs(z - Complex(1.0, 0.0)) < 1e-14);

  const Image constant(4, 7, 2.5);
  const FreqImage c = fft2(constant);
  CHECK(std::abs(c(0, 0) - Complex(2.5 * 28, 0.0)) < 1e-12);
  for (std::size_t i = 1; i < c.coeffs.size(); ++i) CHECK(std::abs(c.coeffs[i]) < 1e-12);
}

TEST_CASE("inverse of forward reproduces the input") {
  for (auto [h, w] : {std::pair{8, 8}, std::pair{7, 5}, std::pair{1, 9}, std::pair{54, 54}}) {
    const Image x = random_image(h, w, 1000 + h * w);
    const Image back = ifft2_real(fft2(x));
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back.data()[i] - x.data()[i]));
    CHECK(err / l2_norm(x.data()) < 1e-12);

    std::mt19937_64 gen(h + w);
    const auto z = random_complex(x.size(), gen);
    const auto zz = ifft2(fft2(h, w, z));
    CHECK(relative_diff(zz, z) < 1e-12);
  }
}

TEST_CASE("real input has a Hermitian symmetric spectrum") {
  const std::size_t h = 6, w = 9;
  const FreqImage s = fft2(random_image(h, w, 3));
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) CHECK(std::abs(s(r, c) - std::conj(s((h - r) % h, (w - c) % w))) < 1e-12);
}

TEST_CASE("Parseval holds with the 1/(HW) convention") {
  for (int trial = 0; trial < 10; ++trial) {
    const Image x = random_image(5 + trial, 12 - trial, 40 + trial);
    const FreqImage s = fft2(x);
    double spectral = 0.0;
    for (const auto& z : s.coeffs) spectral += std::norm(z);
    const double spatial = std::pow(l2_norm(x.data()), 2);
    CHECK(std::abs(spectral / static_cast<double>(x.size()) - spatial) / spatial < 1e-10);
  }
}

TEST_CASE("half-spectrum transform agrees with the full one") {
  for (auto [h, w] : {std::pair{8, 8}, std::pair{7, 6}, std::pair{5, 9}}) {
    const Image x = random_image(h, w, 77);
    const FreqImage full = fft2(x);
    RealFft2 rfft(h, w);
    std::vector<Complex> half(rfft.spectrum_size());
    rfft.forward(x.data(), half);
    double weighted = 0.0;
    for (std::size_t r = 0; r < static_cast<std::size_t>(h); ++r)
      for (std::size_t c = 0; c < rfft.half_cols(); ++c) {
        const Complex z = half[r * rfft.half_cols() + c];
        CHECK(std::abs(z - full(r, c)) < 1e-12);
        weighted += rfft.column_weight(c) * std::norm(z);
      }
    double total = 0.0;
    for (const auto& z : full.coeffs) total += std::norm(z);
    CHECK(std::abs(weighted - total) / total < 1e-12);

    Image back(h, w);
    rfft.inverse(half, back.data());
    CHECK(max_abs_diff(back, x) < 1e-12);
    // The inverse must not consume its input.
    std::vector<double> again(x.size());
    rfft.inverse(half, again);
    CHECK(std::equal(again.begin(), again.end(), back.data().begin()));
  }
}

TEST_CASE("spectral products equal brute-force periodic convolution") {
  const Image a = random_image(8, 8, 5);
  const Image b = random_image(8, 8, 6);
  const FreqImage fa = fft2(a);
  const FreqImage fb = fft2(b);
  FreqImage prod{8, 8, std::vector<Complex>(64)};
  for (std::size_t i = 0; i < 64; ++i) prod.coeffs[i] = fa.coeffs[i] * fb.coeffs[i];
  CHECK(max_abs_diff(ifft2_real(prod), naive_periodic_convolution(a, b)) < 1e-10);
}

TEST_CASE("pad_atom anchors the support at the origin") {
  const std::vector<double> atom{1, 2, 3, 4, 5, 6};
  const auto padded = pad_atom(atom, 2, 3, 4, 5);
  CHECK(padded.size() == 20);
  CHECK(padded[0] == 1);
  CHECK(padded[2] == 3);
  CHECK(padded[5] == 4);
  CHECK(padded[7] == 6);
  CHECK(padded[3] == 0);
  CHECK(padded[10] == 0);
  CHECK(error_kind([&] { pad_atom(atom, 2, 3, 1, 5); }) == ErrorKind::argument);
}

TEST_CASE("Tikhonov with zero weight keeps everything in the lowpass") {
  const Image s = random_image(6, 7, 8);
  const TikhonovSplit split = tikhonov_split(s, 0.0);
  CHECK(split.lowpass == s);
  for (double v : split.highpass.data()) CHECK(v == 0.0);
  CHECK(error_kind([&] { tikhonov_split(s, -1.0); }) == ErrorKind::argument);
}

TEST_CASE("Tikhonov highpass of a constant image vanishes") {
  for (double lambda : {0.5, 5.0, 100.0}) {
    const TikhonovSplit split = tikhonov_split(Image(9, 8, 0.37), lambda);
    for (double v : split.highpass.data()) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("Tikhonov lowpass matches the explicit dense solve") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image s = random_image(8, 8, 500 + seed);
    for (double lambda : {0.3, 5.0}) {
      const TikhonovSplit split = tikhonov_split(s, lambda);
      CHECK(max_abs_diff(split.lowpass, dense_tikhonov_lowpass(s, lambda)) < 1e-10);
    }
  }
  // Non-square and odd dims exercise the half-spectrum edge columns.
  const Image s = random_image(5, 7, 9);
  CHECK(max_abs_diff(tikhonov_split(s, 2.0).lowpass, dense_tikhonov_lowpass(s, 2.0)) < 1e-10);
}

TEST_CASE("Tikhonov split sums to the input, keeps the mean and is linear") {
  const Image s1 = random_image(12, 10, 31, 3.0);
  const Image s2 = random_image(12, 10, 32, 0.5);
  const TikhonovSplit a = tikhonov_split(s1, 5.0);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    const double sum = a.lowpass.data()[i] + a.highpass.data()[i];
    CHECK(std::abs(sum - s1.data()[i]) <= 1e-12 * std::max(1.0, std::abs(s1.data()[i])));
  }
  CHECK(std::abs(mean(a.lowpass) - mean(s1)) < 1e-10);

  const double alpha = 1.7, beta = -0.4;
  Image combo(12, 10);
  for (std::size_t i = 0; i < combo.size(); ++i) combo.data()[i] = alpha * s1.data()[i] + beta * s2.data()[i];
  const TikhonovSplit b = tikhonov_split(s2, 5.0);
  const TikhonovSplit c = tikhonov_split(combo, 5.0);
  for (std::size_t i = 0; i < combo.size(); ++i) {
    CHECK(std::abs(c.lowpass.data()[i] - (alpha * a.lowpass.data()[i] + beta * b.lowpass.data()[i])) < 1e-10);
    CHECK(std::abs(c.highpass.data()[i] - (alpha * a.highpass.data()[i] + beta * b.highpass.data()[i])) < 1e-10);
  }
}

TEST_CASE("rank-one solve: pure ridge and scalar case") {
  std::mt19937_64 gen(1);
  const auto b = random_complex(5, gen);
  const auto x = solve_rank1_system(std::vector<Complex>(5), 2.0, b);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(x[i] - b[i] / 2.0) < 1e-15);

  const Complex d(0.3, -1.2);
  const Complex rhs(2.0, 0.5);
  const auto y = solve_rank1_system(std::vector<Complex>{d}, 0.7, std::vector<Complex>{rhs});
  CHECK(std::abs(y[0] - rhs / (0.7 + std::norm(d))) < 1e-15);
}

TEST_CASE("rank-one solve matches a dense LU solve") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dhat = random_complex(4, gen);
    const auto b = random_complex(4, gen);
    const auto x = solve_rank1_system(dhat, 1.0, b);
    CHECK(relative_diff(x, dense_solve(rank1_matrix(dhat, 1.0), b)) < 1e-12);
  }
}

TEST_CASE("rank-one residual bound over randomized instances") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> kdist(1, 40);
  std::uniform_real_distribution<double> logrho(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = kdist(gen);
    const double rho = std::pow(10.0, logrho(gen));
    const auto dhat = random_complex(k, gen);
    const auto b = random_complex(k, gen);
    const auto x = solve_rank1_system(dhat, rho, b);
    const auto ax = matvec(rank1_matrix(dhat, rho), x);
    CHECK(relative_diff(ax, b) <= 1e-10);
  }
}

TEST_CASE("Hermitian solve: single row, zero rows and dense agreement") {
  std::mt19937_64 gen(4);
  const auto row = random_complex(6, gen);
  const auto b = random_complex(6, gen);
  CHECK(relative_diff(solve_hermitian_system(row, 1, 0.8, b), solve_rank1_system(row, 0.8, b)) < 1e-12);

  const auto zero = solve_hermitian_system(std::vector<Complex>(18), 3, 4.0, b);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(zero[i] - b[i] / 4.0) < 1e-15);

  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = random_complex(3 * 5, gen);
    const auto rhs = random_complex(5, gen);
    const auto x = solve_hermitian_system(rows, 3, 0.5, rhs);
    CHECK(relative_diff(x, dense_solve(gram_matrix(rows, 3, 5, 0.5), rhs)) < 1e-12);
  }
}

TEST_CASE("Hermitian residual bound over randomized instances") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> kdist(1, 12);
  std::uniform_int_distribution<std::size_t> jdist(1, 8);
  std::uniform_real_distribution<double> logsigma(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = kdist(gen);
    const std::size_t j = jdist(gen);
    const double sigma = std::pow(10.0, logsigma(gen));
    const auto rows = random_complex(j * k, gen);
    const auto b = random_complex(k, gen);
    const auto x = solve_hermitian_system(rows, j, sigma, b);
    CHECK(relative_diff(matvec(gram_matrix(rows, j, k, sigma), x), b) <= 1e-10);
  }
}

TEST_CASE("packed Cholesky factor reuses the Gram matrix across shifts") {
  std::mt19937_64 gen(6);
  const std::size_t k = 4;
  const auto rows = random_complex(2 * k, gen);
  const auto dense = gram_matrix(rows, 2, k, 0.0);
  std::vector<Complex> packed(k * (k + 1) / 2);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) packed[HermitianCholesky::packed_index(k, i, j)] = dense[i * k + j];
  HermitianCholesky chol(k);
  const auto b = random_complex(k, gen);
  for (double shift : {0.1, 1.0, 10.0}) {
    chol.factor(packed, shift);
    std::vector<Complex> x(k);
    chol.solve(b, x);
    CHECK(relative_diff(x, dense_solve(gram_matrix(rows, 2, k, shift), b)) < 1e-12);
  }
}

TEST_CASE("argument checks") {
  CHECK(error_kind([] { fft2(0, 3, {}); }) == ErrorKind::argument);
  CHECK(error_kind([] { solve_rank1_system(std::vector<Complex>(2), 0.0, std::vector<Complex>(2)); }) ==
        ErrorKind::argument);
  CHECK(error_kind([] { solve_rank1_system(std::vector<Complex>(2), 1.0, std::vector<Complex>(3)); }) ==
        ErrorKind::argument);
  CHECK(error_kind([] { solve_hermitian_system(std::vector<Complex>(4), 2, -1.0, std::vector<Complex>(2)); }) ==
        ErrorKind::argument);
  CHECK(error_kind([] { solve_hermitian_system({}, 0, 1.0, std::vector<Complex>(2)); }) == ErrorKind::argument);
}
