#include "airsparse/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "airsparse/cdl.hpp"
#include "airsparse/csc.hpp"
#include "airsparse/errors.hpp"
#include "airsparse/preprocess.hpp"
#include "json.hpp"

namespace airsparse {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorKind::config, "'" + key + "': " + what);
}

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) config_error(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(key, "expected a finite number");
  return v;
}

std::uint64_t get_uint(const json& j, const std::string& key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) config_error(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  config_error(key, "expected an integer");
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) config_error(key, "expected a boolean");
  return j.get<bool>();
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(lambda > 0.0)) config_error("lambda", "must be > 0");
  if (rho0 && !(*rho0 > 0.0)) config_error("rho0", "must be > 0");
  if (!(mu > 1.0)) config_error("mu", "must be > 1");
  if (!(tau > 1.0)) config_error("tau", "must be > 1");
  if (max_iter == 0) config_error("max_iter", "must be > 0");
  if (!(eps_abs >= 0.0)) config_error("eps_abs", "must be >= 0");
  if (!(eps_rel >= 0.0)) config_error("eps_rel", "must be >= 0");
  if (atoms == 0) config_error("atoms", "must be > 0");
  if (atom_size == 0 || atom_size % 2 == 0) config_error("atom_size", "must be an odd integer > 0");
  if (patches == 0) config_error("patches", "must be > 0");
  if (patch_size == 0) config_error("patch_size", "must be > 0");
  if (!(tikhonov_lambda >= 0.0)) config_error("tikhonov_lambda", "must be >= 0");
  if (!(clip_hu[0] < clip_hu[1])) config_error("clip_hu", "requires lo < hi");
  if (outer_iters == 0) config_error("outer_iters", "must be > 0");
  if (!(sigma0 > 0.0)) config_error("sigma0", "must be > 0");
  if (min_airway_voxels == 0) config_error("min_airway_voxels", "must be >= 1");
}

SolverConfig PipelineConfig::solver() const {
  SolverConfig s;
  s.lambda = lambda;
  s.rho0 = rho0;
  s.adapt_rho = adapt_rho;
  s.mu = mu;
  s.tau = tau;
  s.max_iter = max_iter;
  s.eps_abs = eps_abs;
  s.eps_rel = eps_rel;
  return s;
}

DictUpdateConfig PipelineConfig::dict_update() const {
  DictUpdateConfig d;
  d.sigma0 = sigma0;
  d.adapt_sigma = adapt_rho;
  d.mu = mu;
  d.tau = tau;
  d.eps_abs = eps_abs;
  d.eps_rel = eps_rel;
  return d;
}

CdlConfig PipelineConfig::cdl() const {
  CdlConfig c;
  c.atom_count = atoms;
  c.atom_size = atom_size;
  c.lambda = lambda;
  c.outer_iters = outer_iters;
  c.coding = solver();
  c.dict = dict_update();
  c.seed = seed;
  return c;
}

SamplerParams PipelineConfig::sampler() const {
  SamplerParams p;
  p.count = patches;
  p.patch_size = patch_size;
  p.min_airway_voxels = min_airway_voxels;
  p.seed = seed;
  return p;
}

PipelineConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::config, "config must be a JSON object");

  PipelineConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "lambda") c.lambda = get_real(value, key);
    else if (key == "rho0") c.rho0 = get_real(value, key);
    else if (key == "adapt_rho") c.adapt_rho = get_bool(value, key);
    else if (key == "mu") c.mu = get_real(value, key);
    else if (key == "tau") c.tau = get_real(value, key);
    else if (key == "max_iter") c.max_iter = get_uint(value, key);
    else if (key == "eps_abs") c.eps_abs = get_real(value, key);
    else if (key == "eps_rel") c.eps_rel = get_real(value, key);
    else if (key == "atoms") c.atoms = get_uint(value, key);
    else if (key == "atom_size") c.atom_size = get_uint(value, key);
    else if (key == "patches") c.patches = get_uint(value, key);
    else if (key == "patch_size") c.patch_size = get_uint(value, key);
    else if (key == "tikhonov_lambda") c.tikhonov_lambda = get_real(value, key);
    else if (key == "seed") c.seed = get_uint(value, key);
    else if (key == "clip_hu") {
      if (!value.is_array() || value.size() != 2) config_error(key, "expected [lo, hi]");
      c.clip_hu = {get_real(value[0], key), get_real(value[1], key)};
    } else if (key == "outer_iters") c.outer_iters = get_uint(value, key);
    else if (key == "sigma0") c.sigma0 = get_real(value, key);
    else if (key == "min_airway_voxels") c.min_airway_voxels = get_uint(value, key);
    else if (key == "add_lowpass") c.add_lowpass = get_bool(value, key);
    else config_error(key, "unknown key");
  }
  c.validate();
  return c;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config (" + path.string() + ")");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& c) {
  json doc = {
      {"lambda", c.lambda},
      {"adapt_rho", c.adapt_rho},
      {"mu", c.mu},
      {"tau", c.tau},
      {"max_iter", c.max_iter},
      {"eps_abs", c.eps_abs},
      {"eps_rel", c.eps_rel},
      {"atoms", c.atoms},
      {"atom_size", c.atom_size},
      {"patches", c.patches},
      {"patch_size", c.patch_size},
      {"tikhonov_lambda", c.tikhonov_lambda},
      {"seed", c.seed},
      {"clip_hu", c.clip_hu},
      {"outer_iters", c.outer_iters},
      {"sigma0", c.sigma0},
      {"min_airway_voxels", c.min_airway_voxels},
      {"add_lowpass", c.add_lowpass},
  };
  if (c.rho0) doc["rho0"] = *c.rho0;
  return doc.dump(2);
}

void write_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write config (" + path.string() + ")");
  out << dump_config(config) << "\n";
}

}  // namespace airsparse
