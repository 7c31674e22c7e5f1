// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "airsparse/cdl.hpp"
#include "airsparse/csc.hpp"
#include "airsparse/metrics.hpp"
#include "airsparse/pipeline.hpp"
#include "airsparse/spectral.hpp"
#include "airsparse/tensor_io.hpp"
#include "oracles.hpp"
#include "phantom.hpp"
#include "test_util.hpp"

#ifdef AIRSPARSE_HAVE_CLI
#include "cli.hpp"
#endif

using namespace airsparse;
using namespace airsparse::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<Complex> random_complex(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<Complex> v(n);
  for (auto& z : v) z = {normal(gen), normal(gen)};
  return v;
}

double complex_norm(std::span<const Complex> v) {
  double acc = 0.0;
  for (const auto& z : v) acc += std::norm(z);
  return std::sqrt(acc);
}

std::vector<Complex> matvec(const std::vector<Complex>& m, const std::vector<Complex>& x) {
  const std::size_t k = x.size();
  std::vector<Complex> y(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) y[i] += m[i * k + j] * x[j];
  return y;
}

double relative_residual(const std::vector<Complex>& m, const std::vector<Complex>& x, const std::vector<Complex>& b) {
  auto ax = matvec(m, x);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
  return complex_norm(ax) / complex_norm(b);
}

double relative_error(const std::vector<Complex>& x, const std::vector<Complex>& ref) {
  std::vector<Complex> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - ref[i];
  return complex_norm(d) / complex_norm(ref);
}

Image shifted(const Image& s, std::size_t dr, std::size_t dc) {
  Image out(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r)
    for (std::size_t c = 0; c < s.cols(); ++c) out((r + dr) % s.rows(), (c + dc) % s.cols()) = s(r, c);
  return out;
}

// Criterion 1 ------------------------------------------------------------

Outcome lasso_equivalence() {
  const auto start = Clock::now();
  // A 1x1 delta is centred in its support and anchored at the origin.
  Dictionary delta(1, 1, 1);
  delta.atom(0)[0] = 1.0;
  SolverConfig cfg;
  cfg.eps_abs = 0.0;
  cfg.eps_rel = 1e-10;
  cfg.max_iter = 2000;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Image s = random_image(32, 32, 1000 + i);
    const CscResult res = csc_solve(delta, s, cfg);
    worst = std::max(worst, max_abs_diff(res.maps.map(0), soft_threshold(s.data(), cfg.lambda)));
  }
  const double t = seconds_since(start);
  return {worst <= 1e-6 && t < 5.0, "max abs error " + sci(worst) + " (<= 1e-6), " + fmt("%.2f", t) + " s (< 5 s)"};
}

// Criterion 2 ------------------------------------------------------------

Outcome ista_equivalence() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Dictionary d = random_unit_dictionary(4, 5, 2000 + i);
    const Image s = random_image(16, 16, 3000 + i);
    const CscResult res = csc_solve(d, s, SolverConfig{});
    const double admm = csc_functional(d, res.maps, s, 0.2);
    const double ista = naive_functional(d, ista_solve(d, s, 0.2, 20000), s, 0.2);
    worst = std::max(worst, std::abs(admm - ista) / ista);
  }
  const double t = seconds_since(start);
  return {worst <= 5e-3 && t < 60.0,
          "worst relative gap " + sci(worst) + " (<= 5e-3), " + fmt("%.2f", t) + " s (< 60 s)"};
}

// Criterion 3 ------------------------------------------------------------

Outcome frequency_solvers() {
  const auto start = Clock::now();
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> kdist(1, 64);
  std::uniform_int_distribution<std::size_t> jdist(1, 16);
  std::uniform_real_distribution<double> logw(-2.0, 2.0);
  double rank1_res = 0.0, rank1_err = 0.0, herm_res = 0.0, herm_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = kdist(gen);
    const double rho = std::pow(10.0, logw(gen));
    const auto dhat = random_complex(k, gen);
    const auto b = random_complex(k, gen);
    std::vector<Complex> m(k * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) m[i * k + j] = std::conj(dhat[i]) * dhat[j] + (i == j ? rho : 0.0);
    const auto x = solve_rank1_system(dhat, rho, b);
    rank1_res = std::max(rank1_res, relative_residual(m, x, b));
    rank1_err = std::max(rank1_err, relative_error(x, dense_solve(m, b)));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + kdist(gen) % 36;
    const std::size_t j_count = jdist(gen);
    const double sigma = std::pow(10.0, logw(gen));
    const auto rows = random_complex(j_count * k, gen);
    const auto b = random_complex(k, gen);
    std::vector<Complex> m(k * k);
    for (std::size_t j = 0; j < j_count; ++j)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = 0; q < k; ++q) m[p * k + q] += std::conj(rows[j * k + p]) * rows[j * k + q];
    for (std::size_t p = 0; p < k; ++p) m[p * k + p] += sigma;
    const auto x = solve_hermitian_system(rows, j_count, sigma, b);
    herm_res = std::max(herm_res, relative_residual(m, x, b));
    herm_err = std::max(herm_err, relative_error(x, dense_solve(m, b)));
  }
  const double t = seconds_since(start);
  const bool pass = rank1_res <= 1e-12 && herm_res <= 1e-12 && t < 5.0;
  return {pass, "max relative residual rank-1 " + sci(rank1_res) + ", Hermitian " + sci(herm_res) +
                    " (<= 1e-12); max deviation from dense LU " + sci(std::max(rank1_err, herm_err)) + "; " +
                    fmt("%.2f", t) + " s (< 5 s)"};
}

// Criterion 4 ------------------------------------------------------------

Outcome tikhonov_correctness() {
  double split_err = 0.0, mean_err = 0.0, dense_err = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t h = i < 10 ? 8 : 64;
    const Image s = random_image(h, h + (i % 3), 4000 + i, 1.0 + static_cast<double>(i));
    const double lambda = 0.5 + static_cast<double>(i % 5) * 2.0;
    const TikhonovSplit split = tikhonov_split(s, lambda);
    double sum_s = 0.0, sum_l = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
      const double v = s.data()[p];
      split_err = std::max(split_err, std::abs(split.lowpass.data()[p] + split.highpass.data()[p] - v) /
                                          std::max(1.0, std::abs(v)));
      sum_s += v;
      sum_l += split.lowpass.data()[p];
    }
    mean_err = std::max(mean_err, std::abs(sum_s - sum_l) / static_cast<double>(s.size()));
    if (h == 8 && s.cols() == 8)
      dense_err = std::max(dense_err, max_abs_diff(split.lowpass.data(), dense_tikhonov_lowpass(s, lambda).data()));
  }
  const bool pass = split_err <= 1e-12 && mean_err <= 1e-10 && dense_err <= 1e-10;
  return {pass, "l+h-s " + sci(split_err) + " (<= 1e-12), mean drift " + sci(mean_err) +
                    " (<= 1e-10), dense 8x8 gap " + sci(dense_err) + " (<= 1e-10)"};
}

// Criteria 5 and 6 share one learning run -----------------------------------

struct RecoveryRun {
  std::size_t recovered = 0;
  std::vector<double> best_ncc;
  double worst_increase = 0.0;
  std::size_t updates_checked = 0;
  std::size_t violations = 0;
  double max_norm_deviation = 0.0;
  double seconds = 0.0;
};

const RecoveryRun& recovery_run() {
  static const RecoveryRun run = [] {
    RecoveryRun r;
    const auto start = Clock::now();
    const PlantedData planted = make_planted(3, 5, 20, 32, 10, 4242);
    CdlConfig cfg;
    cfg.atom_count = 3;
    cfg.atom_size = 5;
    cfg.lambda = 0.2;
    cfg.outer_iters = 100;
    cfg.seed = 7;
    cfg.on_update = [&r](std::size_t, const Dictionary& d) {
      ++r.updates_checked;
      if (d.atom_rows() != 5 || d.atom_cols() != 5 || d.count() != 3) ++r.violations;
      for (std::size_t k = 0; k < d.count(); ++k) {
        const double dev = std::abs(l2_norm(d.atom(k)) - 1.0);
        r.max_norm_deviation = std::max(r.max_norm_deviation, dev);
        if (!(dev <= 1e-9)) ++r.violations;
      }
    };
    const CdlResult res = cdl_learn(planted.images, cfg);
    double previous = res.report.initial_functional;
    for (double f : res.report.functional) {
      r.worst_increase = std::max(r.worst_increase, f - previous);
      previous = f;
    }
    for (std::size_t p = 0; p < 3; ++p) {
      double best = 0.0;
      for (std::size_t k = 0; k < res.dict.count(); ++k)
        best = std::max(best, max_shift_ncc(planted.atoms.atom_image(p), res.dict.atom_image(k)));
      r.best_ncc.push_back(best);
      if (best >= 0.9) ++r.recovered;
    }
    r.seconds = seconds_since(start);
    return r;
  }();
  return run;
}

Outcome cdl_recovery() {
  const RecoveryRun& r = recovery_run();
  const bool pass = r.recovered >= 2 && r.worst_increase <= 1e-8 && r.seconds < 300.0;
  std::string ncc;
  for (double v : r.best_ncc) ncc += (ncc.empty() ? "" : "/") + fmt("%.4f", v);
  return {pass, std::to_string(r.recovered) + "/3 atoms recovered (>= 2; best NCC " + ncc +
                    "), worst functional increase " + sci(r.worst_increase) + " (<= 1e-8), " +
                    fmt("%.1f", r.seconds) + " s (< 300 s)"};
}

Outcome constraint_feasibility() {
  const RecoveryRun& r = recovery_run();
  const bool pass = r.violations == 0 && r.updates_checked == 100;
  return {pass, std::to_string(r.violations) + " violations over " + std::to_string(r.updates_checked) +
                    " dictionary updates, max |norm - 1| " + sci(r.max_norm_deviation)};
}

// Criterion 7 ------------------------------------------------------------

Outcome pipeline_smoke() {
  const auto start = Clock::now();
  std::vector<ScanInput> scans;
  for (std::uint64_t i = 0; i < 3; ++i) {
    Phantom p = make_phantom({16, 96, 96}, 10 + i);
    scans.push_back({std::move(p.volume), std::move(p.airway_mask), std::move(p.lung_mask)});
  }
  LearnOptions learn;
  learn.sampler.count = 50;
  learn.sampler.patch_size = 64;
  learn.sampler.seed = 3;
  learn.cdl.atom_count = 36;
  learn.cdl.atom_size = 5;
  learn.cdl.lambda = 0.2;
  learn.cdl.outer_iters = 10;
  learn.cdl.seed = 3;
  const LearnResult learned = learn_from_scans(scans, learn);
  const double learn_seconds = seconds_since(start);

  const Phantom target = make_phantom({8, 64, 64}, 99);
  const MaskVolume full(target.volume.shape, 1);
  EncodeOptions enc;
  enc.keep_maps = true;
  const EncodedVolume encoded = encode_volume(target.volume, full, learned.dict, enc);

  const Volume3D unit = clip_rescale(target.volume, enc.clip);
  std::vector<double> highpass;
  for (std::size_t z = 0; z < unit.shape.slices; ++z) {
    const Image h = tikhonov_split(unit.slice(z), enc.tikhonov_lambda).highpass;
    highpass.insert(highpass.end(), h.data().begin(), h.data().end());
  }
  // Unit-normalized input: the peak signal value is 1.
  const double quality = psnr(highpass, encoded.reconstruction.data, 1.0);
  std::size_t zeros = 0, total = 0;
  for (const auto& m : encoded.maps) {
    zeros += static_cast<std::size_t>(std::count(m.data().begin(), m.data().end(), 0.0));
    total += m.data().size();
  }
  const double zero_fraction = static_cast<double>(zeros) / static_cast<double>(total);
  const double t = seconds_since(start);
  const bool pass = quality >= 20.0 && zero_fraction >= 0.5 && t < 600.0;
  return {pass, std::to_string(learned.learned_atom_count) + " learned -> " + std::to_string(learned.kept_indices.size()) +
                    " kept -> " + std::to_string(learned.dict.count()) + " augmented atoms; PSNR " +
                    fmt("%.2f", quality) + " dB (>= 20), zero fraction " + fmt("%.4f", zero_fraction) +
                    " (>= 0.5); learn " + fmt("%.1f", learn_seconds) + " s, total " + fmt("%.1f", t) + " s (< 600 s)"};
}

// Criterion 8 ------------------------------------------------------------

Outcome equivariance() {
  SolverConfig tight;
  tight.eps_abs = 0.0;
  tight.eps_rel = 1e-10;
  tight.max_iter = 5000;
  double scale_err = 0.0, shift_err = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Dictionary d = random_unit_dictionary(4, 5, 5000 + i);
    const Image s = random_image(16, 16, 6000 + i);
    const CscResult base = csc_solve(d, s, tight);
    const double base_norm = l2_norm(base.maps.data());
    for (double alpha : {0.5, 2.0}) {
      Image scaled = s;
      for (double& v : scaled.data()) v *= alpha;
      SolverConfig cfg = tight;
      cfg.lambda = tight.lambda * alpha;
      const CscResult res = csc_solve(d, scaled, cfg);
      std::vector<double> diff(res.maps.data().size());
      for (std::size_t p = 0; p < diff.size(); ++p) diff[p] = res.maps.data()[p] - alpha * base.maps.data()[p];
      scale_err = std::max(scale_err, l2_norm(diff) / (alpha * base_norm));
    }
    const CscResult plain = csc_solve(d, s, SolverConfig{});
    const std::size_t dr = 1 + i, dc = 15 - i;
    const CscResult moved = csc_solve(d, shifted(s, dr, dc), SolverConfig{});
    for (std::size_t k = 0; k < d.count(); ++k) {
      const auto m = plain.maps.map(k);
      const Image expected = shifted(Image(16, 16, std::vector<double>(m.begin(), m.end())), dr, dc);
      shift_err = std::max(shift_err, max_abs_diff(moved.maps.map(k), expected.data()));
    }
  }
  const bool pass = scale_err <= 1e-6 && shift_err <= 1e-6;
  return {pass, "scaling relative error " + sci(scale_err) + ", shift max error " + sci(shift_err) + " (<= 1e-6)"};
}

// Criterion 9 ------------------------------------------------------------

Outcome dice_metric() {
  const std::vector<double> gt{0, 1, 1, 1, 0, 0, 1, 0};
  const std::vector<double> disjoint{1, 0, 0, 0, 1, 1, 0, 0};
  const std::vector<double> half(8, 0.5);
  const std::vector<double> ones(8, 1.0);
  const double same = dice(gt, gt).dice;
  const double none = dice(disjoint, gt).dice;
  const double soft = dice(half, ones).dice;
  bool examples = same == 1.0 && none == 0.0 && soft == 2.0 / 3.0;

  std::mt19937_64 gen(9);
  std::bernoulli_distribution coin(0.4);
  std::size_t failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 500;
    std::vector<double> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = coin(gen);
      g[i] = coin(gen);
    }
    g[gen() % n] = 1.0;
    const double pg = dice(p, g).dice;
    if (pg != dice(g, p).dice) ++failures;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pp(n), gg(n);
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = p[perm[i]];
      gg[i] = g[perm[i]];
    }
    if (dice(pp, gg).dice != pg) ++failures;
  }
  return {examples && failures == 0, "examples " + fmt("%.17g", same) + ", " + fmt("%.17g", none) + ", " +
                                         fmt("%.17g", soft) + "; " + std::to_string(failures) +
                                         " symmetry/permutation failures over 100 pairs"};
}

// Criterion 10 -----------------------------------------------------------

#ifdef AIRSPARSE_HAVE_CLI
int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// Relative path -> bytes for every file under dir.
std::vector<std::pair<std::string, std::vector<char>>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::vector<char>>> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.emplace_back(fs::relative(entry.path(), dir).string(), read_bytes(entry.path()));
  std::sort(files.begin(), files.end());
  return files;
}

Outcome cli_determinism() {
  TempDir tmp;
  std::string scans, airways;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const Phantom p = make_phantom({6, 48, 48}, 70 + i);
    const std::string id = std::to_string(i);
    save_volume(p.volume, tmp / ("scan" + id + ".npy"));
    save_mask(p.airway_mask, tmp / ("airway" + id + ".npy"));
    scans += (i ? "," : "") + (tmp / ("scan" + id + ".npy")).string();
    airways += (i ? "," : "") + (tmp / ("airway" + id + ".npy")).string();
  }
  const Phantom target = make_phantom({6, 48, 48}, 80);
  save_volume(target.volume, tmp / "target.npy");
  save_mask(target.lung_mask, tmp / "target_lung.npy");
  {
    std::ofstream cfg(tmp / "config.json");
    cfg << R"({"patches": 12, "patch_size": 32, "atoms": 8, "outer_iters": 4})";
  }

  const fs::path dict = tmp / "dict";
  const std::vector<std::string> learn{"learn-dict", "--scans", scans, "--masks", airways, "--config",
                                       (tmp / "config.json").string(), "--seed", "7", "--out", dict.string()};
  auto encode = [&](const fs::path& out, const char* threads) {
    return std::vector<std::string>{"encode", "--volume", (tmp / "target.npy").string(), "--mask",
                                    (tmp / "target_lung.npy").string(), "--dict", dict.string(), "--save-maps",
                                    "--threads", threads, "--out", out.string()};
  };

  if (run_cli(learn) != 0) return {false, "first learn-dict run failed"};
  const auto learn_first = snapshot(dict);
  if (run_cli(learn) != 0) return {false, "second learn-dict run failed"};
  const bool learn_same = snapshot(dict) == learn_first;

  const fs::path enc = tmp / "enc";
  if (run_cli(encode(enc, "1")) != 0) return {false, "first encode run failed"};
  const auto enc_first = snapshot(enc);
  if (run_cli(encode(enc, "1")) != 0) return {false, "second encode run failed"};
  const bool encode_same = snapshot(enc) == enc_first;

  const fs::path enc4 = tmp / "enc4";
  if (run_cli(encode(enc4, "4")) != 0) return {false, "encode with 4 threads failed"};
  const bool threads_same = read_bytes(enc / "reconstruction.npy") == read_bytes(enc4 / "reconstruction.npy") &&
                            read_bytes(enc / "maps.npy") == read_bytes(enc4 / "maps.npy") &&
                            read_bytes(enc / "encode.json") == read_bytes(enc4 / "encode.json");

  auto word = [](bool ok) { return ok ? std::string("identical") : std::string("DIFFERENT"); };
  return {learn_same && encode_same && threads_same,
          "learn-dict rerun " + word(learn_same) + " (" + std::to_string(learn_first.size()) + " files), encode rerun " +
              word(encode_same) + " (" + std::to_string(enc_first.size()) + " files), --threads 1 vs 4 " +
              word(threads_same)};
}
#else
Outcome cli_determinism() { return {false, "CLI target not built"}; }
#endif

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, lasso_equivalence},     {2, ista_equivalence}, {3, frequency_solvers}, {4, tikhonov_correctness},
      {5, cdl_recovery},          {6, constraint_feasibility}, {7, pipeline_smoke}, {8, equivariance},
      {9, dice_metric},           {10, cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << o.detail << "  ["
              << fmt("%.1f", seconds_since(start)) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
