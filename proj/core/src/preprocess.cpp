#include "airsparse/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "airsparse/errors.hpp"
#include "airsparse/rng.hpp"

namespace airsparse {

Volume3D clip_rescale(const Volume3D& volume, double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::argument,
          "clip range requires lo < hi");
  require(volume.domain == ValueDomain::hu, ErrorKind::argument, "clip_rescale expects a volume in HU");
  Volume3D out = volume;
  out.domain = ValueDomain::unit_normalized;
  const double width = hi - lo;
  for (double& v : out.data) v = (std::clamp(v, lo, hi) - lo) / width;
  return out;
}

CropBox full_box(Shape3 shape) { return {{0, 0, 0}, {shape.slices, shape.rows, shape.cols}}; }

CropBox mask_bounding_box(const MaskVolume& mask, std::size_t margin) {
  const Shape3 s = mask.shape;
  std::array<std::size_t, 3> lo{s.slices, s.rows, s.cols};
  std::array<std::size_t, 3> hi{0, 0, 0};
  bool any = false;
  for (std::size_t z = 0; z < s.slices; ++z)
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c) {
        if (!mask.at(z, r, c)) continue;
        any = true;
        const std::array<std::size_t, 3> p{z, r, c};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
  if (!any) fail(ErrorKind::empty_mask, "lung mask has no nonzero voxels");

  const std::array<std::size_t, 3> dims{s.slices, s.rows, s.cols};
  CropBox box;
  for (int a = 0; a < 3; ++a) {
    box.begin[a] = lo[a] >= margin ? lo[a] - margin : 0;
    box.end[a] = std::min(dims[a], hi[a] + margin + 1);
  }
  return box;
}

namespace {

void check_box(const CropBox& box, Shape3 shape) {
  const std::array<std::size_t, 3> dims{shape.slices, shape.rows, shape.cols};
  for (int a = 0; a < 3; ++a)
    require(box.begin[a] < box.end[a] && box.end[a] <= dims[a], ErrorKind::range,
            "crop box exceeds volume dims");
}

template <class T, class Src>
std::vector<T> copy_box(const Src& src, const CropBox& box) {
  const Shape3 out = box.shape();
  std::vector<T> data;
  data.reserve(out.count());
  for (std::size_t z = box.begin[0]; z < box.end[0]; ++z)
    for (std::size_t r = box.begin[1]; r < box.end[1]; ++r)
      for (std::size_t c = box.begin[2]; c < box.end[2]; ++c) data.push_back(src.at(z, r, c));
  return data;
}

}  // namespace

Volume3D crop(const Volume3D& volume, const CropBox& box) {
  check_box(box, volume.shape);
  Volume3D out = volume;
  out.shape = box.shape();
  out.data = copy_box<double>(volume, box);
  return out;
}

MaskVolume crop(const MaskVolume& mask, const CropBox& box) {
  check_box(box, mask.shape);
  MaskVolume out;
  out.shape = box.shape();
  out.data = copy_box<std::uint8_t>(mask, box);
  return out;
}

CropResult crop_voi(const Volume3D& volume, const MaskVolume& lung_mask, std::size_t margin) {
  require(volume.shape == lung_mask.shape, ErrorKind::argument, "lung mask dims do not match volume dims");
  CropBox box = mask_bounding_box(lung_mask, margin);
  return {crop(volume, box), box};
}

Volume3D embed(const Volume3D& cropped, const CropBox& box, Shape3 original) {
  check_box(box, original);
  require(cropped.shape == box.shape(), ErrorKind::range, "cropped volume does not match crop box");
  Volume3D out = cropped;
  out.shape = original;
  out.data.assign(original.count(), 0.0);
  std::size_t i = 0;
  for (std::size_t z = box.begin[0]; z < box.end[0]; ++z)
    for (std::size_t r = box.begin[1]; r < box.end[1]; ++r)
      for (std::size_t c = box.begin[2]; c < box.end[2]; ++c) out.at(z, r, c) = cropped.data[i++];
  return out;
}

Image extract_patch(const Volume3D& volume, const PatchProvenance& where, std::size_t patch_size) {
  require(where.slice_index < volume.shape.slices && where.row_offset + patch_size <= volume.shape.rows &&
              where.col_offset + patch_size <= volume.shape.cols,
          ErrorKind::range, "patch window exceeds volume");
  Image patch(patch_size, patch_size);
  for (std::size_t r = 0; r < patch_size; ++r)
    for (std::size_t c = 0; c < patch_size; ++c)
      patch(r, c) = volume.at(where.slice_index, where.row_offset + r, where.col_offset + c);
  return patch;
}

PatchSet sample_patches(std::span<const Volume3D> volumes, std::span<const MaskVolume> airway_masks,
                        const SamplerParams& params) {
  require(!volumes.empty(), ErrorKind::argument, "no scans given to the patch sampler");
  require(volumes.size() == airway_masks.size(), ErrorKind::argument, "scan and mask lists differ in length");
  require(params.patch_size >= 1, ErrorKind::argument, "patch_size must be >= 1");
  require(params.max_attempts >= 1, ErrorKind::argument, "max_attempts must be >= 1");
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    require(volumes[i].shape == airway_masks[i].shape, ErrorKind::argument,
            "airway mask " + std::to_string(i) + " dims do not match its scan");
    require(params.patch_size <= volumes[i].shape.rows && params.patch_size <= volumes[i].shape.cols,
            ErrorKind::argument, "patch_size exceeds the axial plane of scan " + std::to_string(i));
  }

  Rng rng(params.seed);
  PatchSet set;
  set.sampler_seed = params.seed;
  set.source_scan_count = volumes.size();
  set.patches.reserve(params.count);

  const std::size_t p = params.patch_size;
  std::size_t rejections = 0;
  while (set.patches.size() < params.count) {
    PatchProvenance where;
    where.scan_id = rng.uniform_index(volumes.size());
    const Shape3 shape = volumes[where.scan_id].shape;
    where.slice_index = rng.uniform_index(shape.slices);
    where.row_offset = rng.uniform_index(shape.rows - p + 1);
    where.col_offset = rng.uniform_index(shape.cols - p + 1);

    const MaskVolume& mask = airway_masks[where.scan_id];
    std::size_t airway = 0;
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c) airway += mask.at(where.slice_index, where.row_offset + r, where.col_offset + c) != 0;

    if (airway >= params.min_airway_voxels) {
      set.patches.push_back({extract_patch(volumes[where.scan_id], where, p), where});
      rejections = 0;
    } else if (++rejections >= params.max_attempts) {
      fail(ErrorKind::sampling_exhausted,
           "no window with >= " + std::to_string(params.min_airway_voxels) + " airway voxels after " +
               std::to_string(params.max_attempts) + " consecutive draws");
    }
  }
  return set;
}

}  // namespace airsparse
