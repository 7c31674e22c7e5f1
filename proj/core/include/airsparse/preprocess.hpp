#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "airsparse/types.hpp"

namespace airsparse {

struct ClipRange {
  double lo = -1000.0;
  double hi = 600.0;
};

/// v -> (clamp(v, lo, hi) - lo) / (hi - lo). Input must be in HU.
Volume3D clip_rescale(const Volume3D& volume, double lo, double hi);
inline Volume3D clip_rescale(const Volume3D& volume, ClipRange range) {
  return clip_rescale(volume, range.lo, range.hi);
}

/// Half-open voxel box [begin, end) per axis (slice, row, col).
struct CropBox {
  std::array<std::size_t, 3> begin{};
  std::array<std::size_t, 3> end{};

  Shape3 shape() const { return {end[0] - begin[0], end[1] - begin[1], end[2] - begin[2]}; }
  bool operator==(const CropBox&) const = default;
};

CropBox full_box(Shape3 shape);

/// Tight bounding box of the nonzero mask voxels, dilated by `margin` and
/// clamped to the volume.
CropBox mask_bounding_box(const MaskVolume& mask, std::size_t margin);

struct CropResult {
  Volume3D volume;
  CropBox box;
};

CropResult crop_voi(const Volume3D& volume, const MaskVolume& lung_mask, std::size_t margin);

Volume3D crop(const Volume3D& volume, const CropBox& box);
MaskVolume crop(const MaskVolume& mask, const CropBox& box);

/// Writes `cropped` back into a zero volume of `original` dims at `box`.
Volume3D embed(const Volume3D& cropped, const CropBox& box, Shape3 original);

struct PatchProvenance {
  std::size_t scan_id = 0;
  std::size_t slice_index = 0;
  std::size_t row_offset = 0;
  std::size_t col_offset = 0;

  bool operator==(const PatchProvenance&) const = default;
};

struct Patch2D {
  Image data;
  PatchProvenance provenance;
};

struct PatchSet {
  std::vector<Patch2D> patches;
  std::uint64_t sampler_seed = 0;
  std::size_t source_scan_count = 0;
};

struct SamplerParams {
  std::size_t count = 50;
  std::size_t patch_size = 64;
  std::size_t min_airway_voxels = 1;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 10000;
};

/// Rejection-samples axial patches whose airway-mask window holds at least
/// `min_airway_voxels` voxels. Each draw takes, in order, a scan index, an
/// axial slice and a top-left row/col offset, each uniform via
/// SplitMix64::uniform_index. More than `max_attempts` consecutive rejections
/// raise a sampling-exhausted error.
PatchSet sample_patches(std::span<const Volume3D> volumes, std::span<const MaskVolume> airway_masks,
                        const SamplerParams& params);

Image extract_patch(const Volume3D& volume, const PatchProvenance& where, std::size_t patch_size);

}  // namespace airsparse
