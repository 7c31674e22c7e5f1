#include <benchmark/benchmark.h>

#include <vector>

#include "airsparse/cdl.hpp"
#include "airsparse/csc.hpp"
#include "airsparse/rng.hpp"
#include "airsparse/spectral.hpp"

using namespace airsparse;

namespace {

Image noise_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Image img(rows, cols);
  for (double& v : img.data()) v = rng.normal();
  return img;
}

std::vector<Image> noise_images(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::vector<Image> out;
  for (std::size_t j = 0; j < count; ++j) out.push_back(noise_image(size, size, seed + j));
  return out;
}

}  // namespace

static void BM_RealFft2Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RealFft2 fft(n, n);
  const Image img = noise_image(n, n, 1);
  std::vector<Complex> spectrum(fft.spectrum_size());
  for (auto _ : state) {
    fft.forward(img.data(), spectrum);
    benchmark::DoNotOptimize(spectrum.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_RealFft2Forward)->Arg(32)->Arg(64)->Arg(128)->Arg(512);

static void BM_RealFft2RoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RealFft2 fft(n, n);
  const Image img = noise_image(n, n, 2);
  std::vector<Complex> spectrum(fft.spectrum_size());
  std::vector<double> back(fft.spatial_size());
  for (auto _ : state) {
    fft.forward(img.data(), spectrum);
    fft.inverse(spectrum, back);
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_RealFft2RoundTrip)->Arg(64)->Arg(512);

static void BM_TikhonovSplit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Image img = noise_image(n, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tikhonov_split(img, 5.0));
}
BENCHMARK(BM_TikhonovSplit)->Arg(64)->Arg(512);

// Arguments: image side, atom count.
static void BM_CscSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Dictionary dict = init_dictionary(k, 5, 4);
  const CscSolver solver(dict, n, n, SolverConfig{});
  const Image img = noise_image(n, n, 5);
  std::size_t iterations = 0;
  for (auto _ : state) {
    const CscResult res = solver.solve(img);
    iterations = res.report.iterations_run;
    benchmark::DoNotOptimize(res.maps.data().data());
  }
  state.counters["admm_iters"] = static_cast<double>(iterations);
}
BENCHMARK(BM_CscSolve)->Args({32, 4})->Args({64, 36})->Args({64, 144})->Unit(benchmark::kMillisecond);

// Arguments: image count, atom count.
static void BM_DictUpdate(benchmark::State& state) {
  const auto images_n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto images = noise_images(images_n, 64, 6);
  const Dictionary dict = init_dictionary(k, 5, 7);
  const CscSolver solver(dict, 64, 64, SolverConfig{});
  std::vector<CoefficientMaps> maps;
  for (const auto& img : images) maps.push_back(solver.solve(img).maps);
  for (auto _ : state) {
    Rng rng(8);
    benchmark::DoNotOptimize(dict_update(maps, images, dict, DictUpdateConfig{}, rng));
  }
}
BENCHMARK(BM_DictUpdate)->Args({10, 8})->Args({50, 36})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
