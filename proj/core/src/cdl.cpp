#include "airsparse/cdl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "airsparse/errors.hpp"
#include "airsparse/parallel.hpp"
#include "airsparse/spectral.hpp"

namespace airsparse {
namespace {

// Zero-mean (when the support allows it) unit-norm Gaussian atom. Returns
// false if the draw degenerates to zero.
bool draw_atom(std::span<double> atom, Rng& rng) {
  for (double& v : atom) v = rng.normal();
  if (atom.size() > 1) {
    const double mean = std::accumulate(atom.begin(), atom.end(), 0.0) / static_cast<double>(atom.size());
    for (double& v : atom) v -= mean;
  }
  const double norm = l2_norm(atom);
  if (!(norm > 0.0)) return false;
  for (double& v : atom) v /= norm;
  return true;
}

// True iff x_kj has a nonzero entry for some j.
bool atom_used(std::span<const CoefficientMaps> maps, std::size_t k) {
  return std::any_of(maps.begin(), maps.end(), [k](const CoefficientMaps& m) {
    auto values = m.map(k);
    return std::any_of(values.begin(), values.end(), [](double v) { return v != 0.0; });
  });
}

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

void check_training_set(std::span<const CoefficientMaps> maps, std::span<const Image> images,
                        const Dictionary& dict) {
  require(!images.empty(), ErrorKind::argument, "no training images");
  require(maps.size() == images.size(), ErrorKind::argument, "map list and image list differ in length");
  const std::size_t rows = images.front().rows();
  const std::size_t cols = images.front().cols();
  require(dict.atom_rows() <= rows && dict.atom_cols() <= cols, ErrorKind::argument,
          "atom support exceeds training image dims");
  for (std::size_t j = 0; j < images.size(); ++j) {
    require(images[j].rows() == rows && images[j].cols() == cols, ErrorKind::argument,
            "training images must share dims");
    require(maps[j].count() == dict.count() && maps[j].rows() == rows && maps[j].cols() == cols,
            ErrorKind::argument, "coefficient maps " + std::to_string(j) + " do not match image/dictionary");
  }
}

}  // namespace

Dictionary init_dictionary(std::size_t atom_count, std::size_t atom_size, Rng& rng) {
  require(atom_count >= 1, ErrorKind::initialization, "atom count must be >= 1");
  require(atom_size >= 1, ErrorKind::initialization, "atom size must be >= 1");
  require(atom_size * atom_size >= 2, ErrorKind::initialization,
          "a 1x1 atom cannot be both zero-mean and unit-norm");
  Dictionary dict(atom_count, atom_size, atom_size);
  for (std::size_t k = 0; k < atom_count; ++k)
    if (!draw_atom(dict.atom(k), rng)) fail(ErrorKind::initialization, "degenerate random atom");
  return dict;
}

Dictionary init_dictionary(std::size_t atom_count, std::size_t atom_size, std::uint64_t seed) {
  Rng rng(seed);
  return init_dictionary(atom_count, atom_size, rng);
}

ProjectedAtom project_constraint(const Image& candidate, std::size_t support_rows, std::size_t support_cols,
                                 Rng& rng) {
  require(support_rows >= 1 && support_cols >= 1 && support_rows <= candidate.rows() &&
              support_cols <= candidate.cols(),
          ErrorKind::argument, "support exceeds candidate dims");
  ProjectedAtom out{Image(support_rows, support_cols), false};
  for (std::size_t r = 0; r < support_rows; ++r)
    for (std::size_t c = 0; c < support_cols; ++c) out.atom(r, c) = candidate(r, c);
  const double norm = l2_norm(out.atom.data());
  if (norm == 0.0 || !std::isfinite(norm)) {
    while (!draw_atom(out.atom.data(), rng)) {
    }
    out.reinitialized = true;
    return out;
  }
  for (double& v : out.atom.data()) v /= norm;
  return out;
}

void DictUpdateConfig::validate() const {
  require(sigma0 > 0.0 && std::isfinite(sigma0), ErrorKind::argument, "sigma0 must be > 0");
  require(mu > 1.0 && tau > 1.0, ErrorKind::argument, "mu and tau must be > 1");
  require(max_iter > 0, ErrorKind::argument, "max_iter must be > 0");
  require(eps_abs >= 0.0 && eps_rel >= 0.0, ErrorKind::argument, "tolerances must be >= 0");
}

DictUpdateResult dict_update(std::span<const CoefficientMaps> maps, std::span<const Image> images,
                             const Dictionary& current, const DictUpdateConfig& config, Rng& rng) {
  config.validate();
  check_training_set(maps, images, current);

  const std::size_t k_count = current.count();
  const std::size_t rows = images.front().rows();
  const std::size_t cols = images.front().cols();
  const std::size_t plane = rows * cols;
  const std::size_t n = k_count * plane;
  const std::size_t h = current.atom_rows();
  const std::size_t w = current.atom_cols();
  const std::size_t packed = k_count * (k_count + 1) / 2;

  RealFft2 fft(rows, cols);
  const std::size_t f = fft.spectrum_size();

  // Per-frequency normal equations: gram(w) = sum_j conj(x_j) x_j^T and
  // rhs(w) = sum_j conj(x_j) s_j, frequency-major.
  std::vector<Complex> gram(f * packed, Complex{});
  std::vector<Complex> rhs(f * k_count, Complex{});
  {
    std::vector<Complex> x_hat(k_count * f);
    std::vector<Complex> s_hat(f);
    std::vector<Complex> row(k_count);
    for (std::size_t j = 0; j < images.size(); ++j) {
      fft.forward(images[j].data(), s_hat);
      for (std::size_t k = 0; k < k_count; ++k)
        fft.forward(maps[j].map(k), std::span<Complex>(x_hat).subspan(k * f, f));
      for (std::size_t q = 0; q < f; ++q) {
        for (std::size_t k = 0; k < k_count; ++k) row[k] = x_hat[k * f + q];
        Complex* g = gram.data() + q * packed;
        Complex* b = rhs.data() + q * k_count;
        for (std::size_t p = 0; p < k_count; ++p) {
          const Complex cp = std::conj(row[p]);
          b[p] += cp * s_hat[q];
          Complex* dst = g + HermitianCholesky::packed_index(k_count, p, p);
          for (std::size_t t = p; t < k_count; ++t) dst[t - p] += cp * row[t];
        }
      }
    }
  }

  std::vector<HermitianCholesky> factors(f, HermitianCholesky(k_count));
  double sigma = config.sigma0;
  auto refactor = [&] {
    for (std::size_t q = 0; q < f; ++q)
      factors[q].factor(std::span<const Complex>(gram).subspan(q * packed, packed), sigma);
  };
  refactor();

  std::vector<double> d(n, 0.0);
  std::vector<double> g(n, 0.0);
  std::vector<double> g_prev(n, 0.0);
  std::vector<double> hdual(n, 0.0);
  // g starts at the current atom when some map uses it and at zero
  // otherwise, so an atom without data collapses and is reinitialized.
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!atom_used(maps, k)) continue;
    auto padded = pad_atom(current.atom(k), h, w, rows, cols);
    std::copy(padded.begin(), padded.end(), g.begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  std::vector<Complex> d_hat(k_count * f);
  std::vector<Complex> g_hat(k_count * f);
  std::vector<Complex> h_hat(k_count * f, Complex{});
  for (std::size_t k = 0; k < k_count; ++k)
    fft.forward(std::span<const double>(g).subspan(k * plane, plane), std::span<Complex>(g_hat).subspan(k * f, f));

  Dictionary projected = current;
  std::set<std::size_t> reinitialized;
  DictUpdateResult result{current, {}};
  DictUpdateReport& report = result.report;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::vector<Complex> b(k_count);
  std::vector<Complex> sol(k_count);
  Image candidate(rows, cols);

  for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
    for (std::size_t q = 0; q < f; ++q) {
      for (std::size_t k = 0; k < k_count; ++k)
        b[k] = rhs[q * k_count + k] + sigma * (g_hat[k * f + q] - h_hat[k * f + q]);
      factors[q].solve(b, sol);
      for (std::size_t k = 0; k < k_count; ++k) d_hat[k * f + q] = sol[k];
    }
    for (std::size_t k = 0; k < k_count; ++k)
      fft.inverse(std::span<const Complex>(d_hat).subspan(k * f, f), std::span<double>(d).subspan(k * plane, plane));

    g.swap(g_prev);
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t off = k * plane;
      for (std::size_t i = 0; i < plane; ++i) candidate.data()[i] = d[off + i] + hdual[off + i];
      ProjectedAtom atom = project_constraint(candidate, h, w, rng);
      if (atom.reinitialized) reinitialized.insert(k);
      projected.set_atom(k, atom.atom);
      std::fill_n(g.begin() + static_cast<std::ptrdiff_t>(off), plane, 0.0);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) g[off + r * cols + c] = atom.atom(r, c);
    }

    double r2 = 0.0, s2 = 0.0, d2 = 0.0, g2 = 0.0, h2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = d[i] - g[i];
      hdual[i] += diff;
      const double ds = g[i] - g_prev[i];
      r2 += diff * diff;
      s2 += ds * ds;
      d2 += d[i] * d[i];
      g2 += g[i] * g[i];
      h2 += hdual[i] * hdual[i];
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      Complex* gh = g_hat.data() + k * f;
      fft.forward(std::span<const double>(g).subspan(k * plane, plane), std::span<Complex>(gh, f));
      const Complex* dh = d_hat.data() + k * f;
      Complex* hh = h_hat.data() + k * f;
      for (std::size_t q = 0; q < f; ++q) hh[q] += dh[q] - gh[q];
    }

    const double primal = std::sqrt(r2);
    const double dual = sigma * std::sqrt(s2);
    report.iterations_run = iter;
    report.primal_residuals.push_back(primal);
    report.dual_residuals.push_back(dual);
    report.sigma_history.push_back(sigma);
    if (!std::isfinite(primal) || !std::isfinite(dual))
      fail(ErrorKind::numerical_divergence, "dictionary update diverged at iteration " + std::to_string(iter));

    const double eps_pri = sqrt_n * config.eps_abs + config.eps_rel * std::max(std::sqrt(d2), std::sqrt(g2));
    const double eps_dua = sqrt_n * config.eps_abs + config.eps_rel * sigma * std::sqrt(h2);
    if (primal <= eps_pri && dual <= eps_dua) {
      report.converged = true;
      break;
    }

    if (config.adapt_sigma) {
      double scale = 1.0;
      if (primal > config.mu * dual) {
        scale = config.tau;
      } else if (dual > config.mu * primal) {
        scale = 1.0 / config.tau;
      }
      if (scale != 1.0) {
        sigma *= scale;
        for (double& v : hdual) v /= scale;
        for (Complex& v : h_hat) v /= scale;
        refactor();
      }
    }
  }

  report.reinitialized_atoms.assign(reinitialized.begin(), reinitialized.end());
  double before = 0.0;
  double after = 0.0;
  for (std::size_t j = 0; j < images.size(); ++j) {
    before += data_fit(current, maps[j], images[j]);
    after += data_fit(projected, maps[j], images[j]);
  }
  report.data_fit_before = before;
  report.data_fit_after = after;
  report.accepted = after <= before;
  if (report.accepted) result.dict = std::move(projected);
  return result;
}

double cdl_functional(const Dictionary& dict, std::span<const CoefficientMaps> maps, std::span<const Image> images,
                      double lambda) {
  require(maps.size() == images.size(), ErrorKind::argument, "map list and image list differ in length");
  double fit = 0.0;
  double l1 = 0.0;
  for (std::size_t j = 0; j < images.size(); ++j) {
    fit += data_fit(dict, maps[j], images[j]);
    l1 += l1_norm(maps[j].data());
  }
  return fit + lambda * l1;
}

CdlResult cdl_learn(std::span<const Image> images, const CdlConfig& config) {
  Rng rng(config.seed);
  Dictionary initial = init_dictionary(config.atom_count, config.atom_size, rng);
  // The reinitialization stream continues from the init draws.
  CdlConfig cfg = config;
  cfg.seed = rng.state();
  return cdl_learn(images, cfg, std::move(initial));
}

CdlResult cdl_learn(std::span<const Image> images, const CdlConfig& config, Dictionary initial) {
  require(!images.empty(), ErrorKind::argument, "cdl_learn needs at least one training image");
  require(config.outer_iters > 0, ErrorKind::argument, "outer_iters must be > 0");
  initial.validate();
  const std::size_t rows = images.front().rows();
  const std::size_t cols = images.front().cols();
  for (const Image& img : images)
    require(img.rows() == rows && img.cols() == cols, ErrorKind::argument, "training images must share dims");
  require(initial.atom_rows() <= rows && initial.atom_cols() <= cols, ErrorKind::argument,
          "atom support exceeds training image dims");

  SolverConfig coding = config.coding;
  coding.lambda = config.lambda;
  coding.validate();
  config.dict.validate();

  Rng rng(config.seed);
  const std::size_t j_count = images.size();
  const std::size_t threads = resolve_thread_count(config.threads);

  CdlResult result;
  result.dict = std::move(initial);
  result.maps.assign(j_count, CoefficientMaps(result.dict.count(), rows, cols, config.lambda));
  CdlReport& report = result.report;
  report.initial_functional = cdl_functional(result.dict, result.maps, images, config.lambda);

  for (std::size_t outer = 0; outer < config.outer_iters; ++outer) {
    const CscSolver solver(result.dict, rows, cols, coding);
    std::vector<std::size_t> iterations(j_count, 0);
    std::vector<double> residuals(j_count, 0.0);
    parallel_for(j_count, threads, [&](std::size_t j) {
      CscResult coded = solver.solve(images[j], &result.maps[j]);
      iterations[j] = coded.report.iterations_run;
      residuals[j] = coded.report.primal_residuals.empty() ? 0.0 : coded.report.primal_residuals.back();
      const double old_value = csc_functional(result.dict, result.maps[j], images[j], config.lambda);
      const double new_value = csc_functional(result.dict, coded.maps, images[j], config.lambda);
      if (new_value <= old_value) result.maps[j] = std::move(coded.maps);
    });

    DictUpdateResult updated = dict_update(result.maps, images, result.dict, config.dict, rng);
    result.dict = std::move(updated.dict);
    if (config.on_update) config.on_update(outer, result.dict);

    double l1 = 0.0;
    for (const auto& m : result.maps) l1 += l1_norm(m.data());
    const auto& ur = updated.report;
    report.functional.push_back((ur.accepted ? ur.data_fit_after : ur.data_fit_before) + config.lambda * l1);
    report.coding_iterations.push_back(std::accumulate(iterations.begin(), iterations.end(), std::size_t{0}));
    report.coding_max_primal_residual.push_back(*std::max_element(residuals.begin(), residuals.end()));
    report.dict_iterations.push_back(ur.iterations_run);
    report.dict_primal_residual.push_back(ur.primal_residuals.empty() ? 0.0 : ur.primal_residuals.back());
    report.dict_dual_residual.push_back(ur.dual_residuals.empty() ? 0.0 : ur.dual_residuals.back());
    report.reinitialized_atoms.push_back(ur.reinitialized_atoms.size());
    report.dict_update_accepted.push_back(ur.accepted);
  }
  return result;
}

PruneResult prune(const Dictionary& dict, std::span<const CoefficientMaps> maps) {
  PruneResult out;
  for (std::size_t j = 0; j < maps.size(); ++j)
    require(maps[j].count() == dict.count(), ErrorKind::argument, "map count differs from atom count");
  for (std::size_t k = 0; k < dict.count(); ++k) {
    if (atom_used(maps, k)) out.kept_indices.push_back(k);
  }
  if (out.kept_indices.empty()) fail(ErrorKind::empty_dictionary, "every atom has an all-zero coefficient map");
  out.dict = Dictionary(out.kept_indices.size(), dict.atom_rows(), dict.atom_cols());
  for (std::size_t i = 0; i < out.kept_indices.size(); ++i) {
    auto src = dict.atom(out.kept_indices[i]);
    std::copy(src.begin(), src.end(), out.dict.atom(i).begin());
  }
  return out;
}

Image transform_atom(const Image& atom, AtomTransform transform) {
  const std::size_t h = atom.rows();
  const std::size_t w = atom.cols();
  const bool swaps = transform == AtomTransform::rot90 || transform == AtomTransform::rot270 ||
                     transform == AtomTransform::transpose || transform == AtomTransform::anti_transpose;
  Image out(swaps ? w : h, swaps ? h : w);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      double v = 0.0;
      switch (transform) {
        case AtomTransform::identity: v = atom(i, j); break;
        case AtomTransform::flip_ud: v = atom(h - 1 - i, j); break;
        case AtomTransform::flip_lr: v = atom(i, w - 1 - j); break;
        case AtomTransform::rot90: v = atom(j, w - 1 - i); break;  // counter-clockwise
        case AtomTransform::rot180: v = atom(h - 1 - i, w - 1 - j); break;
        case AtomTransform::rot270: v = atom(h - 1 - j, i); break;
        case AtomTransform::transpose: v = atom(j, i); break;
        case AtomTransform::anti_transpose: v = atom(h - 1 - j, w - 1 - i); break;
      }
      out(i, j) = v;
    }
  return out;
}

Dictionary augment(const Dictionary& dict, bool full_orbit) {
  require(dict.atom_rows() == dict.atom_cols(), ErrorKind::argument, "augmentation needs square atoms");
  static constexpr AtomTransform kBasic[] = {AtomTransform::identity, AtomTransform::flip_ud, AtomTransform::flip_lr,
                                             AtomTransform::rot90};
  static constexpr AtomTransform kFull[] = {AtomTransform::identity, AtomTransform::flip_ud,
                                            AtomTransform::flip_lr,  AtomTransform::rot90,
                                            AtomTransform::rot180,   AtomTransform::rot270,
                                            AtomTransform::transpose, AtomTransform::anti_transpose};
  const std::span<const AtomTransform> transforms =
      full_orbit ? std::span<const AtomTransform>(kFull) : std::span<const AtomTransform>(kBasic);

  auto same_bits = [](const Image& a, const Image& b) {
    return std::equal(a.data().begin(), a.data().end(), b.data().begin(),
                      [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
  };

  std::vector<Image> atoms;
  for (std::size_t k = 0; k < dict.count(); ++k) {
    const Image base = dict.atom_image(k);
    for (AtomTransform t : transforms) {
      Image candidate = transform_atom(base, t);
      if (std::none_of(atoms.begin(), atoms.end(), [&](const Image& a) { return same_bits(a, candidate); }))
        atoms.push_back(std::move(candidate));
    }
  }
  Dictionary out(atoms.size(), dict.atom_rows(), dict.atom_cols());
  for (std::size_t k = 0; k < atoms.size(); ++k) out.set_atom(k, atoms[k]);
  return out;
}

}  // namespace airsparse
