#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "airsparse/types.hpp"

namespace airsparse {

enum class DType { float32, float64, uint8, int16 };

std::size_t dtype_size(DType dtype);
/// NPY descr string, e.g. "<f8" or "|u1".
std::string dtype_descr(DType dtype);

/// Raw NPY array: C-order little-endian payload plus shape.
struct NpyArray {
  std::vector<std::size_t> shape;
  DType dtype = DType::float64;
  std::vector<std::byte> payload;

  std::size_t element_count() const;
  /// Widens every element to double.
  std::vector<double> to_doubles() const;

  static NpyArray from_doubles(std::vector<std::size_t> shape, std::span<const double> values);
  static NpyArray from_bytes(std::vector<std::size_t> shape, std::span<const std::uint8_t> values);
};

/// Accepts format versions 1.0 and 2.0 with dtypes f4, f8, u1, i2.
NpyArray read_npy(const std::filesystem::path& path);
NpyArray parse_npy(std::span<const std::byte> bytes);

/// Writes format version 1.0 with the header padded to a 64-byte boundary.
void write_npy(const NpyArray& array, const std::filesystem::path& path);
std::vector<std::byte> serialize_npy(const NpyArray& array);

/// 3D array (a 2D array is read as a single slice) widened to double.
Volume3D load_volume(const std::filesystem::path& path, ValueDomain domain = ValueDomain::hu);
/// Stored as float64.
void save_volume(const Volume3D& volume, const std::filesystem::path& path);

/// Any supported dtype whose values are exactly 0 or 1.
MaskVolume load_mask(const std::filesystem::path& path);
/// Stored as uint8.
void save_mask(const MaskVolume& mask, const std::filesystem::path& path);

/// Dictionary metadata kept in the JSON sidecar next to dict.npy.
struct DictionaryMeta {
  std::size_t atom_count = 0;
  std::size_t support_h = 0;
  std::size_t support_w = 0;
  double lambda_used = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

struct DictionaryFile {
  Dictionary atoms;
  DictionaryMeta meta;
};

/// Writes <dir>/dict.npy (K x h x w float64) and <dir>/dict.json.
void save_dictionary(const DictionaryFile& file, const std::filesystem::path& dir);
/// Re-validates unit norms and that the sidecar agrees with the array.
DictionaryFile load_dictionary(const std::filesystem::path& dir);

enum class Axis { axial, coronal, sagittal };

Axis parse_axis(const std::string& name);
const char* to_string(Axis axis);

/// The 2D plane at `index` along `axis`: axial (rows x cols), coronal
/// (slices x cols), sagittal (slices x rows).
Image extract_plane(const Volume3D& volume, Axis axis, std::size_t index);

/// Maps lo -> 0 and hi -> 255 linearly, clamped. Rounds half away from zero,
/// so (lo + hi) / 2 renders as 128.
std::vector<std::uint8_t> window_to_gray(const Image& plane, double lo, double hi);

/// 8-bit grayscale PNG of one plane.
void render_slice(const Volume3D& volume, Axis axis, std::size_t index, std::array<double, 2> window,
                  const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> pixels);

}  // namespace airsparse
