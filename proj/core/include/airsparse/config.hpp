#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace airsparse {

struct CdlConfig;
struct SolverConfig;
struct DictUpdateConfig;
struct SamplerParams;

/// Every tunable of the learning and encoding pipeline. Field names match
/// the JSON keys; absent keys take these defaults.
struct PipelineConfig {
  double lambda = 0.2;
  std::optional<double> rho0;  // 10 * lambda + 0.1 when unset
  bool adapt_rho = true;
  double mu = 10.0;
  double tau = 2.0;
  std::size_t max_iter = 500;
  double eps_abs = 1e-5;
  double eps_rel = 1e-4;
  std::size_t atoms = 36;
  std::size_t atom_size = 5;
  std::size_t patches = 50;
  std::size_t patch_size = 64;
  double tikhonov_lambda = 5.0;
  std::uint64_t seed = 0;
  std::array<double, 2> clip_hu{-1000.0, 600.0};
  std::size_t outer_iters = 200;
  double sigma0 = 1.0;
  std::size_t min_airway_voxels = 1;
  bool add_lowpass = false;

  /// Throws a config error naming the first offending key.
  void validate() const;

  SolverConfig solver() const;
  DictUpdateConfig dict_update() const;
  CdlConfig cdl() const;
  SamplerParams sampler() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Parses a JSON object; unknown keys and type mismatches are config errors.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig read_config(const std::filesystem::path& path);

/// Canonical JSON with every field present (rho0 only when set).
std::string dump_config(const PipelineConfig& config);
void write_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace airsparse
