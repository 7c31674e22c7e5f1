#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "airsparse/csc.hpp"
#include "airsparse/rng.hpp"
#include "airsparse/types.hpp"

namespace airsparse {

/// K atoms of atom_size x atom_size i.i.d. standard normals, each made
/// zero-mean and then unit norm.
Dictionary init_dictionary(std::size_t atom_count, std::size_t atom_size, std::uint64_t seed);
Dictionary init_dictionary(std::size_t atom_count, std::size_t atom_size, Rng& rng);

struct ProjectedAtom {
  Image atom;  // support_rows x support_cols, unit norm
  bool reinitialized = false;
};

/// Projection onto the feasible set: keep the [0,h) x [0,w) window of the
/// padded candidate and scale it to unit norm. A zero window is replaced by
/// a fresh zero-mean unit-norm random atom drawn from `rng`.
ProjectedAtom project_constraint(const Image& candidate, std::size_t support_rows, std::size_t support_cols,
                                 Rng& rng);

struct DictUpdateConfig {
  double sigma0 = 1.0;
  bool adapt_sigma = true;
  double mu = 10.0;
  double tau = 2.0;
  std::size_t max_iter = 200;
  double eps_abs = 1e-5;
  double eps_rel = 1e-4;

  void validate() const;
};

struct DictUpdateReport {
  std::size_t iterations_run = 0;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  std::vector<double> sigma_history;
  std::vector<std::size_t> reinitialized_atoms;
  bool converged = false;
  double data_fit_before = 0.0;
  double data_fit_after = 0.0;
  /// False when the ADMM result fit the data worse than `current`, in which
  /// case `current` is returned unchanged.
  bool accepted = true;
};

struct DictUpdateResult {
  Dictionary dict;
  DictUpdateReport report;
};

/// Dictionary step with the codes held fixed: ADMM on d with the split
/// g in C, per-frequency Hermitian solves for d and projection for g.
/// Atoms whose maps are zero for every image are reinitialized. The
/// returned dictionary is always feasible and its data fit never exceeds
/// that of `current`.
DictUpdateResult dict_update(std::span<const CoefficientMaps> maps, std::span<const Image> images,
                             const Dictionary& current, const DictUpdateConfig& config, Rng& rng);

struct CdlReport {
  /// sum_j 1/2 |sum_k d_k * x_kj - s_j|^2 + lambda sum_kj |x_kj|_1 after
  /// each outer iteration.
  std::vector<double> functional;
  std::vector<std::size_t> coding_iterations;  // summed over images
  std::vector<double> coding_max_primal_residual;
  std::vector<std::size_t> dict_iterations;
  std::vector<double> dict_primal_residual;
  std::vector<double> dict_dual_residual;
  std::vector<std::size_t> reinitialized_atoms;
  std::vector<bool> dict_update_accepted;
  double initial_functional = 0.0;
};

struct CdlConfig {
  std::size_t atom_count = 36;
  std::size_t atom_size = 5;
  double lambda = 0.2;
  std::size_t outer_iters = 200;
  SolverConfig coding;      // lambda is overridden by `lambda`
  DictUpdateConfig dict;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Called after every dictionary update with the outer iteration index.
  std::function<void(std::size_t, const Dictionary&)> on_update;
};

struct CdlResult {
  Dictionary dict;
  std::vector<CoefficientMaps> maps;
  CdlReport report;
};

/// Alternates warm-started sparse coding of every image with a dictionary
/// update. A coding result that raises an image's objective above its warm
/// start is discarded, so the reported functional is non-increasing.
CdlResult cdl_learn(std::span<const Image> images, const CdlConfig& config);
CdlResult cdl_learn(std::span<const Image> images, const CdlConfig& config, Dictionary initial);

double cdl_functional(const Dictionary& dict, std::span<const CoefficientMaps> maps, std::span<const Image> images,
                      double lambda);

struct PruneResult {
  Dictionary dict;
  std::vector<std::size_t> kept_indices;
};

/// Keeps atom k iff some x_kj has a nonzero entry. Order is preserved.
PruneResult prune(const Dictionary& dict, std::span<const CoefficientMaps> maps);

enum class AtomTransform { identity, flip_ud, flip_lr, rot90, rot180, rot270, transpose, anti_transpose };

Image transform_atom(const Image& atom, AtomTransform transform);

/// Each atom followed by its up-down flip, left-right flip and 90 degree
/// rotation (all eight dihedral images with `full_orbit`); bitwise
/// duplicates are dropped, keeping the first occurrence.
Dictionary augment(const Dictionary& dict, bool full_orbit = false);

}  // namespace airsparse
