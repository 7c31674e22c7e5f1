#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace airsparse {

/// Dense row-major 2D real array. Used for axial slices, patches, single
/// atoms and highpass/lowpass components.
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Image(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Shape3 {
  std::size_t slices = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t count() const noexcept { return slices * rows * cols; }
  bool operator==(const Shape3&) const = default;
};

enum class ValueDomain { hu, unit_normalized, reconstruction };

const char* to_string(ValueDomain domain);

/// 3D scalar field (axes slice/row/col) with voxel spacing.
struct Volume3D {
  Shape3 shape;
  std::vector<double> data;
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  std::string origin_label;
  ValueDomain domain = ValueDomain::hu;

  Volume3D() = default;
  Volume3D(Shape3 s, ValueDomain d, double fill = 0.0)
      : shape(s), data(s.count(), fill), domain(d) {}

  double& at(std::size_t s, std::size_t r, std::size_t c) {
    return data[(s * shape.rows + r) * shape.cols + c];
  }
  double at(std::size_t s, std::size_t r, std::size_t c) const {
    return data[(s * shape.rows + r) * shape.cols + c];
  }

  Image slice(std::size_t index) const;
  void set_slice(std::size_t index, const Image& image);

  /// Throws on zero dims, non-finite values, out-of-range unit data or a
  /// non-positive spacing.
  void validate() const;
};

/// Binary {0,1} voxel mask.
struct MaskVolume {
  Shape3 shape;
  std::vector<std::uint8_t> data;

  MaskVolume() = default;
  explicit MaskVolume(Shape3 s, std::uint8_t fill = 0) : shape(s), data(s.count(), fill) {}

  std::uint8_t& at(std::size_t s, std::size_t r, std::size_t c) {
    return data[(s * shape.rows + r) * shape.cols + c];
  }
  std::uint8_t at(std::size_t s, std::size_t r, std::size_t c) const {
    return data[(s * shape.rows + r) * shape.cols + c];
  }

  std::size_t count_nonzero() const;
  void validate() const;
};

/// K atoms of identical h x w support, stored atom-major.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::size_t count, std::size_t rows, std::size_t cols)
      : count_(count), rows_(rows), cols_(cols), data_(count * rows * cols, 0.0) {}
  Dictionary(std::size_t count, std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t count() const noexcept { return count_; }
  std::size_t atom_rows() const noexcept { return rows_; }
  std::size_t atom_cols() const noexcept { return cols_; }
  std::size_t atom_size() const noexcept { return rows_ * cols_; }

  std::span<double> atom(std::size_t k) {
    return std::span<double>(data_).subspan(k * atom_size(), atom_size());
  }
  std::span<const double> atom(std::size_t k) const {
    return std::span<const double>(data_).subspan(k * atom_size(), atom_size());
  }
  Image atom_image(std::size_t k) const;
  void set_atom(std::size_t k, const Image& atom);

  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  /// Throws unless every atom is finite with unit l2 norm within `tol`.
  void validate(double tol = 1e-9) const;

  bool operator==(const Dictionary&) const = default;

 private:
  std::size_t count_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// K full-size coefficient maps x_k, stored map-major.
class CoefficientMaps {
 public:
  CoefficientMaps() = default;
  CoefficientMaps(std::size_t count, std::size_t rows, std::size_t cols, double lambda = 0.0)
      : count_(count), rows_(rows), cols_(cols), data_(count * rows * cols, 0.0), lambda_(lambda) {}

  std::size_t count() const noexcept { return count_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t plane_size() const noexcept { return rows_ * cols_; }

  std::span<double> map(std::size_t k) {
    return std::span<double>(data_).subspan(k * plane_size(), plane_size());
  }
  std::span<const double> map(std::size_t k) const {
    return std::span<const double>(data_).subspan(k * plane_size(), plane_size());
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double lambda_used() const noexcept { return lambda_; }
  void set_lambda_used(double lambda) noexcept { lambda_ = lambda; }

  bool operator==(const CoefficientMaps&) const = default;

 private:
  std::size_t count_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  double lambda_ = 0.0;
};

double l2_norm(std::span<const double> v);

}  // namespace airsparse
