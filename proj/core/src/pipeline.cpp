#include "airsparse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airsparse/errors.hpp"
#include "airsparse/parallel.hpp"
#include "airsparse/spectral.hpp"

namespace airsparse {
namespace {

template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    e.attach_stage(stage);
    throw;
  }
}

}  // namespace

LearnResult learn_from_scans(std::span<const ScanInput> scans, const LearnOptions& options) {
  require(!scans.empty(), ErrorKind::argument, "no training scans");

  std::vector<Volume3D> volumes;
  std::vector<MaskVolume> airways;
  volumes.reserve(scans.size());
  airways.reserve(scans.size());
  for (const ScanInput& scan : scans) {
    Volume3D unit = run_stage("clip_rescale", [&] { return clip_rescale(scan.volume, options.clip); });
    run_stage("crop_voi", [&] {
      require(scan.airway_mask.shape == scan.volume.shape, ErrorKind::argument,
              "airway mask dims do not match scan dims");
      scan.airway_mask.validate();
      if (scan.lung_mask) {
        CropResult cropped = crop_voi(unit, *scan.lung_mask, options.voi_margin);
        unit = std::move(cropped.volume);
        airways.push_back(crop(scan.airway_mask, cropped.box));
      } else {
        airways.push_back(scan.airway_mask);
      }
    });
    volumes.push_back(std::move(unit));
  }

  LearnResult result;
  result.patches = run_stage("sample_patches", [&] { return sample_patches(volumes, airways, options.sampler); });

  std::vector<Image> highpass = run_stage("tikhonov_split", [&] {
    std::vector<Image> out;
    out.reserve(result.patches.patches.size());
    for (const Patch2D& p : result.patches.patches)
      out.push_back(tikhonov_split(p.data, options.tikhonov_lambda).highpass);
    return out;
  });

  CdlResult learned = run_stage("cdl_learn", [&] { return cdl_learn(highpass, options.cdl); });
  result.report = std::move(learned.report);
  result.learned_atom_count = learned.dict.count();

  Dictionary dict = std::move(learned.dict);
  if (options.prune) {
    PruneResult pruned = run_stage("prune", [&] { return prune(dict, learned.maps); });
    dict = std::move(pruned.dict);
    result.kept_indices = std::move(pruned.kept_indices);
  } else {
    result.kept_indices.resize(dict.count());
    for (std::size_t k = 0; k < dict.count(); ++k) result.kept_indices[k] = k;
  }
  if (options.augment) dict = run_stage("augment", [&] { return augment(dict, options.full_orbit); });
  result.dict = std::move(dict);
  return result;
}

EncodedSlice encode_slice(const CscSolver& solver, const Image& slice, std::size_t slice_index,
                          double tikhonov_lambda, bool add_lowpass) {
  TikhonovSplit split = tikhonov_split(slice, tikhonov_lambda);
  EncodedSlice out;
  out.stats.slice_index = slice_index;
  const bool zero_highpass =
      std::all_of(split.highpass.data().begin(), split.highpass.data().end(), [](double v) { return v == 0.0; });
  if (zero_highpass) {
    out.maps = CoefficientMaps(solver.atom_count(), slice.rows(), slice.cols(), solver.config().lambda);
    out.output = Image(slice.rows(), slice.cols());
  } else {
    CscResult coded;
    try {
      coded = solver.solve(split.highpass);
    } catch (Error& e) {
      throw Error(e.kind(), "slice " + std::to_string(slice_index) + ": " + e.message());
    }
    out.stats.iterations = coded.report.iterations_run;
    out.stats.final_primal_residual = coded.report.primal_residuals.back();
    out.maps = std::move(coded.maps);
    out.output = solver.reconstruct(out.maps);
  }
  const auto values = out.maps.data();
  const auto zeros = std::count(values.begin(), values.end(), 0.0);
  out.stats.sparsity_fraction = static_cast<double>(zeros) / static_cast<double>(values.size());
  if (add_lowpass) {
    auto dst = out.output.data();
    auto low = split.lowpass.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += low[i];
  }
  out.highpass = std::move(split.highpass);
  return out;
}

EncodedVolume encode_volume(const Volume3D& volume, const MaskVolume& lung_mask, const Dictionary& dict,
                            const EncodeOptions& options) {
  dict.validate();
  Volume3D unit = run_stage("clip_rescale", [&] { return clip_rescale(volume, options.clip); });
  CropResult voi = run_stage("crop_voi", [&] { return crop_voi(unit, lung_mask, options.voi_margin); });
  const Shape3 shape = voi.volume.shape;

  EncodedVolume encoded;
  encoded.add_lowpass = options.add_lowpass;
  encoded.crop_box = voi.box;
  encoded.original_shape = volume.shape;
  encoded.dict_ref.atom_count = dict.count();
  encoded.dict_ref.support_h = dict.atom_rows();
  encoded.dict_ref.support_w = dict.atom_cols();
  encoded.dict_ref.lambda_used = options.solver.lambda;
  encoded.reconstruction = Volume3D(shape, ValueDomain::reconstruction);
  encoded.reconstruction.spacing_mm = volume.spacing_mm;
  encoded.reconstruction.origin_label = volume.origin_label;
  encoded.per_slice_stats.resize(shape.slices);
  if (options.keep_maps) encoded.maps.resize(shape.slices);

  run_stage("encode_slices", [&] {
    const CscSolver solver(dict, shape.rows, shape.cols, options.solver);
    parallel_for(shape.slices, resolve_thread_count(options.threads), [&](std::size_t z) {
      EncodedSlice slice = encode_slice(solver, voi.volume.slice(z), z, options.tikhonov_lambda, options.add_lowpass);
      encoded.reconstruction.set_slice(z, slice.output);
      encoded.per_slice_stats[z] = slice.stats;
      if (options.keep_maps) encoded.maps[z] = std::move(slice.maps);
    });
  });
  return encoded;
}

Image mip_project(const Volume3D& volume, Axis axis, std::optional<std::pair<std::size_t, std::size_t>> slab) {
  const Shape3 s = volume.shape;
  const std::size_t extent = axis == Axis::axial ? s.slices : axis == Axis::coronal ? s.rows : s.cols;
  std::size_t begin = 0;
  std::size_t end = extent;
  if (slab) {
    begin = slab->first;
    end = slab->second;
    require(begin < end && end <= extent, ErrorKind::range,
            "slab [" + std::to_string(begin) + "," + std::to_string(end) + ") is outside the " + to_string(axis) +
                " extent " + std::to_string(extent));
  }
  Image out = extract_plane(volume, axis, begin);
  for (std::size_t i = begin + 1; i < end; ++i) {
    const Image plane = extract_plane(volume, axis, i);
    for (std::size_t p = 0; p < out.size(); ++p) out.data()[p] = std::max(out.data()[p], plane.data()[p]);
  }
  return out;
}

Volume3D reembed(const EncodedVolume& encoded, const CropBox& box, Shape3 original_dims) {
  return embed(encoded.reconstruction, box, original_dims);
}

}  // namespace airsparse
