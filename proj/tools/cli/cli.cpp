#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "airsparse/cdl.hpp"
#include "airsparse/config.hpp"
#include "airsparse/errors.hpp"
#include "airsparse/metrics.hpp"
#include "airsparse/parallel.hpp"
#include "airsparse/pipeline.hpp"
#include "airsparse/preprocess.hpp"
#include "airsparse/tensor_io.hpp"
#include "airsparse/version.hpp"
#include "json.hpp"

namespace airsparse::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Raised for malformed flag values that CLI11 cannot check on its own.
struct UsageError {
  std::string message;
};

std::string hex(const unsigned char* bytes, unsigned length) {
  std::ostringstream s;
  s << std::hex << std::setfill('0');
  for (unsigned i = 0; i < length; ++i) s << std::setw(2) << static_cast<int>(bytes[i]);
  return s.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::io, "SHA-256 computation failed");
  return hex(digest, length);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out.flush()), ErrorKind::io, "write failed for " + path.string());
}

ojson file_record(const fs::path& path) {
  return ojson{{"path", path.string()}, {"sha256", sha256_hex(read_text(path))}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::io, "cannot create output directory " + dir.string());
}

template <class T>
T parse_number(const std::string& text, const std::string& flag) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw UsageError{flag + ": '" + text + "' is not a valid number"};
  return value;
}

template <class T>
std::pair<T, T> parse_pair(const std::string& text, const std::string& flag) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
    throw UsageError{flag + ": expected two comma-separated values, got '" + text + "'"};
  return {parse_number<T>(text.substr(0, comma), flag), parse_number<T>(text.substr(comma + 1), flag)};
}

// Everything needed to re-run a command and check its outputs.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  ojson inputs = ojson::array();
  ojson parameters = ojson::object();
  std::optional<std::uint64_t> seed;

  void add_input(const fs::path& path) { inputs.push_back(file_record(path)); }

  void write(const fs::path& path, const std::vector<fs::path>& outputs) const {
    ojson versions = ojson::object();
    for (const auto& [name, value] : component_versions()) versions[name] = value;
    ojson outs = ojson::array();
    for (const fs::path& p : outputs) outs.push_back(file_record(p));
    ojson doc{{"command", command},
              {"argv", argv},
              {"inputs", inputs},
              {"parameters", parameters},
              {"config_hash", sha256_hex(parameters.dump())},
              {"seed", seed ? ojson(*seed) : ojson(nullptr)},
              {"versions", versions},
              {"outputs", outs}};
    write_text(path, doc.dump(2) + "\n");
  }
};

ojson summary(const std::string& command, const std::vector<fs::path>& outputs) {
  ojson outs = ojson::array();
  for (const fs::path& p : outputs) outs.push_back(p.string());
  return ojson{{"command", command}, {"outputs", outs}};
}

ojson box_json(const CropBox& box) {
  return ojson{{"begin", box.begin}, {"end", box.end}};
}

ojson shape_json(Shape3 s) { return ojson::array({s.slices, s.rows, s.cols}); }

ojson config_json(const PipelineConfig& config) { return ojson::parse(dump_config(config)); }

PipelineConfig load_config(const std::optional<std::string>& path, Manifest& manifest) {
  if (!path) return PipelineConfig{};
  PipelineConfig config = read_config(*path);
  manifest.add_input(*path);
  return config;
}

void check_same_count(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  if (a.size() != b.size())
    fail(ErrorKind::argument, std::string(what) + ": " + std::to_string(a.size()) + " scans but " +
                                  std::to_string(b.size()) + " masks");
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string volume;
  std::optional<std::string> clip;
  std::string mask;
  std::size_t margin = 0;
  std::string out;
  std::optional<std::string> config;
};

ojson run_preprocess(const PreprocessArgs& a, Manifest& manifest) {
  PipelineConfig config = load_config(a.config, manifest);
  if (a.clip) {
    auto [lo, hi] = parse_pair<double>(*a.clip, "--clip");
    config.clip_hu = {lo, hi};
  }
  const Volume3D volume = load_volume(a.volume);
  const MaskVolume mask = load_mask(a.mask);
  manifest.add_input(a.volume);
  manifest.add_input(a.mask);

  const Volume3D unit = clip_rescale(volume, config.clip_hu[0], config.clip_hu[1]);
  const CropResult cropped = crop_voi(unit, mask, a.margin);
  const MaskVolume cropped_mask = crop(mask, cropped.box);

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_volume(cropped.volume, dir / "volume.npy");
  save_mask(cropped_mask, dir / "mask.npy");
  ojson voi{{"crop_box", box_json(cropped.box)},
            {"original_shape", shape_json(volume.shape)},
            {"clip_hu", config.clip_hu},
            {"margin", a.margin}};
  write_text(dir / "voi.json", voi.dump(2) + "\n");

  manifest.parameters = {{"clip_hu", config.clip_hu}, {"margin", a.margin}};
  const std::vector<fs::path> outputs{dir / "volume.npy", dir / "mask.npy", dir / "voi.json"};
  manifest.write(dir / "manifest.json", outputs);
  return summary("preprocess", outputs);
}

// ----------------------------------------------------------- extract-patches

struct ExtractArgs {
  std::vector<std::string> scans;
  std::vector<std::string> masks;
  std::optional<std::size_t> count;
  std::optional<std::size_t> patch_size;
  std::optional<std::size_t> min_airway;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::string out;
};

struct TrainingSet {
  std::vector<Volume3D> volumes;
  std::vector<MaskVolume> masks;
};

TrainingSet load_training(const std::vector<std::string>& scans, const std::vector<std::string>& masks,
                          Manifest& manifest) {
  check_same_count(scans, masks, "--scans/--masks");
  TrainingSet set;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    set.volumes.push_back(load_volume(scans[i]));
    set.masks.push_back(load_mask(masks[i]));
    manifest.add_input(scans[i]);
    manifest.add_input(masks[i]);
  }
  return set;
}

ojson run_extract(const ExtractArgs& a, Manifest& manifest) {
  PipelineConfig config = load_config(a.config, manifest);
  if (a.count) config.patches = *a.count;
  if (a.patch_size) config.patch_size = *a.patch_size;
  if (a.min_airway) config.min_airway_voxels = *a.min_airway;
  if (a.seed) config.seed = *a.seed;
  config.validate();

  TrainingSet set = load_training(a.scans, a.masks, manifest);
  std::vector<Volume3D> unit;
  for (const Volume3D& v : set.volumes) unit.push_back(clip_rescale(v, config.clip_hu[0], config.clip_hu[1]));
  for (std::size_t i = 0; i < unit.size(); ++i)
    require(set.masks[i].shape == unit[i].shape, ErrorKind::argument,
            "mask " + a.masks[i] + " does not match scan dims");
  const PatchSet patches = sample_patches(unit, set.masks, config.sampler());

  const std::size_t p = config.patch_size;
  std::vector<double> stacked;
  stacked.reserve(patches.patches.size() * p * p);
  ojson provenance = ojson::array();
  for (const Patch2D& patch : patches.patches) {
    stacked.insert(stacked.end(), patch.data.data().begin(), patch.data.data().end());
    provenance.push_back({{"scan_id", patch.provenance.scan_id},
                          {"slice_index", patch.provenance.slice_index},
                          {"row_offset", patch.provenance.row_offset},
                          {"col_offset", patch.provenance.col_offset}});
  }
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_npy(NpyArray::from_doubles({patches.patches.size(), p, p}, stacked), dir / "patches.npy");
  write_text(dir / "provenance.json", ojson{{"seed", config.seed}, {"patches", provenance}}.dump(2) + "\n");

  manifest.parameters = {{"clip_hu", config.clip_hu},
                         {"count", config.patches},
                         {"patch_size", config.patch_size},
                         {"min_airway_voxels", config.min_airway_voxels},
                         {"seed", config.seed}};
  manifest.seed = config.seed;
  const std::vector<fs::path> outputs{dir / "patches.npy", dir / "provenance.json"};
  manifest.write(dir / "manifest.json", outputs);
  return summary("extract-patches", outputs);
}

// ---------------------------------------------------------------- learn-dict

struct LearnArgs {
  std::vector<std::string> scans;
  std::vector<std::string> masks;
  std::vector<std::string> lung_masks;
  std::optional<std::string> config;
  std::optional<std::size_t> atoms;
  std::optional<std::size_t> atom_size;
  std::optional<double> lambda;
  std::optional<std::size_t> outer_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  bool no_prune = false;
  bool no_augment = false;
  bool full_orbit = false;
};

ojson run_learn(const LearnArgs& a, Manifest& manifest, std::ostream& err) {
  PipelineConfig config = load_config(a.config, manifest);
  if (a.atoms) config.atoms = *a.atoms;
  if (a.atom_size) config.atom_size = *a.atom_size;
  if (a.lambda) config.lambda = *a.lambda;
  if (a.outer_iters) config.outer_iters = *a.outer_iters;
  if (a.seed) config.seed = *a.seed;
  config.validate();
  if (!a.lung_masks.empty()) check_same_count(a.scans, a.lung_masks, "--scans/--lung-masks");

  TrainingSet set = load_training(a.scans, a.masks, manifest);
  std::vector<ScanInput> scans;
  for (std::size_t i = 0; i < set.volumes.size(); ++i) {
    ScanInput scan{std::move(set.volumes[i]), std::move(set.masks[i]), std::nullopt};
    if (!a.lung_masks.empty()) {
      scan.lung_mask = load_mask(a.lung_masks[i]);
      manifest.add_input(a.lung_masks[i]);
    }
    scans.push_back(std::move(scan));
  }

  LearnOptions options;
  options.clip = {config.clip_hu[0], config.clip_hu[1]};
  options.sampler = config.sampler();
  options.tikhonov_lambda = config.tikhonov_lambda;
  options.cdl = config.cdl();
  options.cdl.threads = resolve_thread_count(a.threads.value_or(0));
  options.prune = !a.no_prune;
  options.augment = !a.no_augment;
  options.full_orbit = a.full_orbit;
  const std::size_t outer = config.outer_iters;
  options.cdl.on_update = [&err, outer](std::size_t iter, const Dictionary&) {
    err << "learn-dict: outer iteration " << iter + 1 << "/" << outer << " done\n";
  };

  const LearnResult learned = learn_from_scans(scans, options);

  DictionaryFile file;
  file.atoms = learned.dict;
  file.meta.atom_count = learned.dict.count();
  file.meta.support_h = learned.dict.atom_rows();
  file.meta.support_w = learned.dict.atom_cols();
  file.meta.lambda_used = config.lambda;
  file.meta.seed = config.seed;
  file.meta.notes.push_back("learned " + std::to_string(learned.learned_atom_count) + " atoms");
  if (options.prune) file.meta.notes.push_back("kept " + std::to_string(learned.kept_indices.size()) + " after pruning");
  if (options.augment)
    file.meta.notes.push_back(std::string(options.full_orbit ? "dihedral orbit" : "flip/rot90") + " augmentation");

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_dictionary(file, dir);

  const CdlReport& r = learned.report;
  ojson provenance = ojson::array();
  for (const Patch2D& patch : learned.patches.patches)
    provenance.push_back(ojson::array({patch.provenance.scan_id, patch.provenance.slice_index,
                                       patch.provenance.row_offset, patch.provenance.col_offset}));
  ojson report{{"initial_functional", r.initial_functional},
               {"functional", r.functional},
               {"coding_iterations", r.coding_iterations},
               {"coding_max_primal_residual", r.coding_max_primal_residual},
               {"dict_iterations", r.dict_iterations},
               {"dict_primal_residual", r.dict_primal_residual},
               {"dict_dual_residual", r.dict_dual_residual},
               {"reinitialized_atoms", r.reinitialized_atoms},
               {"dict_update_accepted", r.dict_update_accepted},
               {"learned_atom_count", learned.learned_atom_count},
               {"kept_indices", learned.kept_indices},
               {"final_atom_count", learned.dict.count()},
               {"patches", provenance}};
  write_text(dir / "report.json", report.dump(2) + "\n");

  manifest.parameters = config_json(config);
  manifest.parameters["prune"] = options.prune;
  manifest.parameters["augment"] = options.augment;
  manifest.parameters["full_orbit"] = options.full_orbit;
  manifest.parameters["lung_masks"] = !a.lung_masks.empty();
  manifest.seed = config.seed;
  const std::vector<fs::path> outputs{dir / "dict.npy", dir / "dict.json", dir / "report.json"};
  manifest.write(dir / "manifest.json", outputs);

  ojson out = summary("learn-dict", outputs);
  out["atom_count"] = learned.dict.count();
  out["final_functional"] = r.functional.empty() ? r.initial_functional : r.functional.back();
  return out;
}

// -------------------------------------------------------------------- encode

struct EncodeArgs {
  std::string volume;
  std::string mask;
  std::string dict;
  std::optional<std::string> config;
  std::optional<double> lambda;
  std::optional<double> tikhonov_lambda;
  bool add_lowpass = false;
  bool save_maps = false;
  std::optional<std::size_t> threads;
  std::string out;
};

ojson run_encode(const EncodeArgs& a, Manifest& manifest) {
  PipelineConfig config = load_config(a.config, manifest);
  if (a.lambda) config.lambda = *a.lambda;
  if (a.tikhonov_lambda) config.tikhonov_lambda = *a.tikhonov_lambda;
  if (a.add_lowpass) config.add_lowpass = true;
  config.validate();

  const Volume3D volume = load_volume(a.volume);
  const MaskVolume mask = load_mask(a.mask);
  const DictionaryFile dict = load_dictionary(a.dict);
  manifest.add_input(a.volume);
  manifest.add_input(a.mask);
  manifest.add_input(fs::path(a.dict) / "dict.npy");
  manifest.add_input(fs::path(a.dict) / "dict.json");

  EncodeOptions options;
  options.clip = {config.clip_hu[0], config.clip_hu[1]};
  options.solver = config.solver();
  options.tikhonov_lambda = config.tikhonov_lambda;
  options.add_lowpass = config.add_lowpass;
  options.keep_maps = a.save_maps;
  options.threads = resolve_thread_count(a.threads.value_or(0));
  const EncodedVolume encoded = encode_volume(volume, mask, dict.atoms, options);

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_volume(encoded.reconstruction, dir / "reconstruction.npy");
  std::vector<fs::path> outputs{dir / "reconstruction.npy"};

  ojson slices = ojson::array();
  for (const SliceStats& s : encoded.per_slice_stats)
    slices.push_back({{"slice", s.slice_index},
                      {"iterations", s.iterations},
                      {"final_primal_residual", s.final_primal_residual},
                      {"zero_fraction", s.sparsity_fraction}});
  ojson info{{"crop_box", box_json(encoded.crop_box)},
             {"original_shape", shape_json(encoded.original_shape)},
             {"add_lowpass", encoded.add_lowpass},
             {"atom_count", encoded.dict_ref.atom_count},
             {"atom_shape", {encoded.dict_ref.support_h, encoded.dict_ref.support_w}},
             {"lambda", encoded.dict_ref.lambda_used},
             {"slices", slices}};
  write_text(dir / "encode.json", info.dump(2) + "\n");
  outputs.push_back(dir / "encode.json");

  if (a.save_maps) {
    const Shape3 s = encoded.reconstruction.shape;
    const std::size_t k = dict.atoms.count();
    std::vector<double> stacked;
    stacked.reserve(s.slices * k * s.rows * s.cols);
    for (const CoefficientMaps& m : encoded.maps) stacked.insert(stacked.end(), m.data().begin(), m.data().end());
    write_npy(NpyArray::from_doubles({s.slices, k, s.rows, s.cols}, stacked), dir / "maps.npy");
    outputs.push_back(dir / "maps.npy");
  }

  manifest.parameters = config_json(config);
  manifest.parameters["save_maps"] = a.save_maps;
  manifest.seed = config.seed;
  manifest.write(dir / "manifest.json", outputs);
  return summary("encode", outputs);
}

// -------------------------------------------------------------- render / mip

struct RenderArgs {
  std::string volume;
  std::string axis;
  std::size_t index = 0;
  std::string window;
  std::string out;
};

ojson run_render(const RenderArgs& a, Manifest& manifest) {
  const auto [lo, hi] = parse_pair<double>(a.window, "--window");
  const Volume3D volume = load_volume(a.volume);
  manifest.add_input(a.volume);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  render_slice(volume, parse_axis(a.axis), a.index, {lo, hi}, out);
  manifest.parameters = {{"axis", a.axis}, {"index", a.index}, {"window", {lo, hi}}};
  manifest.write(fs::path(a.out + ".manifest.json"), {out});
  return summary("render", {out});
}

struct MipArgs {
  std::string volume;
  std::string axis;
  std::optional<std::string> slab;
  std::string out;
};

ojson run_mip(const MipArgs& a, Manifest& manifest) {
  std::optional<std::pair<std::size_t, std::size_t>> slab;
  if (a.slab) slab = parse_pair<std::size_t>(*a.slab, "--slab");
  const Volume3D volume = load_volume(a.volume);
  manifest.add_input(a.volume);
  const Image projection = mip_project(volume, parse_axis(a.axis), slab);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_npy(NpyArray::from_doubles({projection.rows(), projection.cols()}, projection.data()), out);
  manifest.parameters = {{"axis", a.axis},
                         {"slab", slab ? ojson::array({slab->first, slab->second}) : ojson(nullptr)}};
  manifest.write(fs::path(a.out + ".manifest.json"), {out});
  return summary("mip", {out});
}

// ------------------------------------------------------------- dice / stats

ojson run_dice(const std::string& pred_path, const std::string& gt_path, bool smooth) {
  const NpyArray pred = read_npy(pred_path);
  require(pred.shape == read_npy(gt_path).shape, ErrorKind::argument, "pred and gt shapes differ");
  const MaskVolume gt = load_mask(gt_path);
  const std::vector<double> p = pred.to_doubles();
  std::vector<double> g(gt.data.begin(), gt.data.end());
  const DiceResult d = dice(p, g, smooth);
  const auto voxels_pred = std::count_if(p.begin(), p.end(), [](double v) { return v != 0.0; });
  return ojson{{"dice", d.dice}, {"loss", d.loss}, {"voxels_pred", voxels_pred}, {"voxels_gt", gt.count_nonzero()}};
}

ojson run_stats(const std::string& maps_path) {
  const NpyArray raw = read_npy(maps_path);
  require(raw.shape.size() == 3 || raw.shape.size() == 4, ErrorKind::argument,
          "maps must be K x H x W or S x K x H x W");
  const bool stacked = raw.shape.size() == 4;
  const std::size_t slices = stacked ? raw.shape[0] : 1;
  const std::size_t k = raw.shape[stacked ? 1 : 0];
  const std::size_t h = raw.shape[stacked ? 2 : 1];
  const std::size_t w = raw.shape[stacked ? 3 : 2];
  const std::vector<double> values = raw.to_doubles();

  SparsityStats total;
  total.per_atom_l1.assign(k, 0.0);
  std::size_t zeros = 0;
  for (std::size_t s = 0; s < slices; ++s) {
    CoefficientMaps maps(k, h, w);
    const auto begin = values.begin() + static_cast<std::ptrdiff_t>(s * k * h * w);
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(k * h * w), maps.data().begin());
    const SparsityStats st = sparsity_stats(maps);
    zeros += static_cast<std::size_t>(std::count(maps.data().begin(), maps.data().end(), 0.0));
    total.l1_norm += st.l1_norm;
    total.max_abs = std::max(total.max_abs, st.max_abs);
    for (std::size_t i = 0; i < k; ++i) total.per_atom_l1[i] += st.per_atom_l1[i];
  }
  total.zero_fraction = values.empty() ? 1.0 : static_cast<double>(zeros) / static_cast<double>(values.size());
  return ojson{{"zero_fraction", total.zero_fraction},
               {"l1_norm", total.l1_norm},
               {"max_abs", total.max_abs},
               {"per_atom_l1", total.per_atom_l1}};
}

int exit_code(const Error& e) {
  return e.kind() == ErrorKind::numerical_divergence ? kExitNumerical : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convolutional sparse coding and dictionary learning for airway CT", "airsparse"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(version()));

  const auto axis_check = CLI::IsMember({"axial", "coronal", "sagittal"});

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Clip and rescale HU, crop to the lung VoI");
  pre_cmd->add_option("--volume", pre.volume, "HU volume (.npy)")->required();
  pre_cmd->add_option("--clip", pre.clip, "LO,HI clip window in HU");
  pre_cmd->add_option("--mask", pre.mask, "lung mask (.npy)")->required();
  pre_cmd->add_option("--margin", pre.margin, "VoI margin in voxels");
  pre_cmd->add_option("--config", pre.config, "JSON config file");
  pre_cmd->add_option("--out", pre.out, "output directory")->required();

  ExtractArgs ext;
  auto* ext_cmd = app.add_subcommand("extract-patches", "Sample airway-containing axial patches");
  ext_cmd->add_option("--scans", ext.scans, "HU volumes")->required()->delimiter(',');
  ext_cmd->add_option("--masks", ext.masks, "airway masks")->required()->delimiter(',');
  ext_cmd->add_option("--count", ext.count, "number of patches");
  ext_cmd->add_option("--patch-size", ext.patch_size, "patch side length");
  ext_cmd->add_option("--min-airway", ext.min_airway, "minimum airway voxels per patch");
  ext_cmd->add_option("--seed", ext.seed, "sampler seed");
  ext_cmd->add_option("--config", ext.config, "JSON config file");
  ext_cmd->add_option("--out", ext.out, "output directory")->required();

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn-dict", "Learn, prune and augment a dictionary");
  learn_cmd->add_option("--scans", learn.scans, "HU volumes")->required()->delimiter(',');
  learn_cmd->add_option("--masks", learn.masks, "airway masks")->required()->delimiter(',');
  learn_cmd->add_option("--lung-masks", learn.lung_masks, "lung masks for VoI cropping")->delimiter(',');
  learn_cmd->add_option("--config", learn.config, "JSON config file");
  learn_cmd->add_option("--atoms", learn.atoms, "atom count");
  learn_cmd->add_option("--atom-size", learn.atom_size, "atom side length (odd)");
  learn_cmd->add_option("--lambda", learn.lambda, "sparsity weight");
  learn_cmd->add_option("--outer-iters", learn.outer_iters, "alternating iterations");
  learn_cmd->add_option("--seed", learn.seed, "sampler and initialization seed");
  learn_cmd->add_option("--threads", learn.threads, "worker threads (default: AIRSPARSE_THREADS or all cores)");
  learn_cmd->add_option("--out", learn.out, "output directory")->required();
  learn_cmd->add_flag("--no-prune", learn.no_prune, "keep atoms with all-zero maps");
  learn_cmd->add_flag("--no-augment", learn.no_augment, "skip flip/rotation augmentation");
  learn_cmd->add_flag("--full-orbit", learn.full_orbit, "augment with all eight dihedral images");

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Sparse-code every axial slice of a volume");
  enc_cmd->add_option("--volume", enc.volume, "HU volume")->required();
  enc_cmd->add_option("--mask", enc.mask, "lung mask")->required();
  enc_cmd->add_option("--dict", enc.dict, "dictionary directory")->required();
  enc_cmd->add_option("--config", enc.config, "JSON config file");
  enc_cmd->add_option("--lambda", enc.lambda, "sparsity weight");
  enc_cmd->add_option("--tikhonov-lambda", enc.tikhonov_lambda, "lowpass smoothing weight");
  enc_cmd->add_flag("--add-lowpass", enc.add_lowpass, "add the lowpass back to the reconstruction");
  enc_cmd->add_flag("--save-maps", enc.save_maps, "write coefficient maps");
  enc_cmd->add_option("--threads", enc.threads, "worker threads (default: AIRSPARSE_THREADS or all cores)");
  enc_cmd->add_option("--out", enc.out, "output directory")->required();

  RenderArgs ren;
  auto* ren_cmd = app.add_subcommand("render", "Write one plane as an 8-bit PNG");
  ren_cmd->add_option("--volume", ren.volume, "volume")->required();
  ren_cmd->add_option("--axis", ren.axis, "axial, coronal or sagittal")->required()->check(axis_check);
  ren_cmd->add_option("--index", ren.index, "plane index")->required();
  ren_cmd->add_option("--window", ren.window, "LO,HI display window")->required();
  ren_cmd->add_option("--out", ren.out, "PNG path")->required();

  MipArgs mip;
  auto* mip_cmd = app.add_subcommand("mip", "Maximum intensity projection");
  mip_cmd->add_option("--volume", mip.volume, "volume")->required();
  mip_cmd->add_option("--axis", mip.axis, "axial, coronal or sagittal")->required()->check(axis_check);
  mip_cmd->add_option("--slab", mip.slab, "A,B half-open index range");
  mip_cmd->add_option("--out", mip.out, "output .npy")->required();

  std::string dice_pred, dice_gt;
  bool dice_smooth = false;
  auto* dice_cmd = app.add_subcommand("dice", "Dice overlap of two masks");
  dice_cmd->add_option("--pred", dice_pred, "prediction (.npy, values in [0,1])")->required();
  dice_cmd->add_option("--gt", dice_gt, "ground truth mask")->required();
  dice_cmd->add_flag("--smooth", dice_smooth, "add a small constant so that empty vs empty is defined");

  std::string stats_maps;
  auto* stats_cmd = app.add_subcommand("stats", "Sparsity statistics of coefficient maps");
  stats_cmd->add_option("--maps", stats_maps, "maps (.npy)")->required();

  std::vector<std::string> argv_storage{"airsparse"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, err, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  Manifest manifest;
  manifest.command = cmd->get_name();
  manifest.argv = args;
  try {
    ojson result;
    if (cmd == pre_cmd) result = run_preprocess(pre, manifest);
    else if (cmd == ext_cmd) result = run_extract(ext, manifest);
    else if (cmd == learn_cmd) result = run_learn(learn, manifest, err);
    else if (cmd == enc_cmd) result = run_encode(enc, manifest);
    else if (cmd == ren_cmd) result = run_render(ren, manifest);
    else if (cmd == mip_cmd) result = run_mip(mip, manifest);
    else if (cmd == dice_cmd) result = run_dice(dice_pred, dice_gt, dice_smooth);
    else result = run_stats(stats_maps);
    out << result.dump() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "airsparse " << manifest.command << ": " << e.message << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "airsparse " << manifest.command << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "airsparse " << manifest.command << ": " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace airsparse::cli
