#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "airsparse/cdl.hpp"
#include "airsparse/csc.hpp"
#include "airsparse/preprocess.hpp"
#include "airsparse/tensor_io.hpp"
#include "airsparse/types.hpp"

namespace airsparse {

/// One training scan in HU with its airway labels. When a lung mask is
/// given, scan and airway mask are cropped to its VoI before sampling.
struct ScanInput {
  Volume3D volume;
  MaskVolume airway_mask;
  std::optional<MaskVolume> lung_mask;
};

struct LearnOptions {
  ClipRange clip;
  std::size_t voi_margin = 0;
  SamplerParams sampler;
  double tikhonov_lambda = 5.0;
  CdlConfig cdl;
  bool prune = true;
  bool augment = true;
  bool full_orbit = false;
};

struct LearnResult {
  Dictionary dict;
  CdlReport report;
  PatchSet patches;                      // unit-normalized patches before highpass
  std::vector<std::size_t> kept_indices;  // atoms surviving pruning
  std::size_t learned_atom_count = 0;
};

/// clip_rescale -> crop_voi -> sample_patches -> Tikhonov highpass ->
/// cdl_learn -> prune -> augment. Errors carry the failing stage name.
LearnResult learn_from_scans(std::span<const ScanInput> scans, const LearnOptions& options);

struct EncodeOptions {
  ClipRange clip;
  std::size_t voi_margin = 0;
  SolverConfig solver;
  double tikhonov_lambda = 5.0;
  bool add_lowpass = false;
  bool keep_maps = false;
  std::size_t threads = 1;
};

struct SliceStats {
  std::size_t slice_index = 0;
  std::size_t iterations = 0;
  double final_primal_residual = 0.0;
  double sparsity_fraction = 1.0;
};

struct EncodedSlice {
  Image output;     // reconstruction, plus lowpass when requested
  Image highpass;
  CoefficientMaps maps;
  SliceStats stats;
};

struct EncodedVolume {
  Volume3D reconstruction;  // VoI dims, value domain `reconstruction`
  bool add_lowpass = false;
  std::vector<SliceStats> per_slice_stats;
  DictionaryMeta dict_ref;
  CropBox crop_box;
  Shape3 original_shape;
  std::vector<CoefficientMaps> maps;  // per slice, only with keep_maps
};

/// Encodes one unit-normalized axial slice. Identically zero highpass skips
/// the solver and yields zero maps.
EncodedSlice encode_slice(const CscSolver& solver, const Image& slice, std::size_t slice_index,
                          double tikhonov_lambda, bool add_lowpass);

/// clip_rescale -> crop_voi -> per axial slice: Tikhonov split, sparse code
/// the highpass, reconstruct (+ lowpass). Slices are independent, so the
/// result does not depend on `threads`.
EncodedVolume encode_volume(const Volume3D& volume, const MaskVolume& lung_mask, const Dictionary& dict,
                            const EncodeOptions& options);

/// Maximum along `axis`, optionally restricted to the half-open index range
/// `slab` on that axis.
Image mip_project(const Volume3D& volume, Axis axis,
                  std::optional<std::pair<std::size_t, std::size_t>> slab = std::nullopt);

/// Places the encoded VoI back into a zero volume of the original dims.
Volume3D reembed(const EncodedVolume& encoded, const CropBox& box, Shape3 original_dims);

}  // namespace airsparse
