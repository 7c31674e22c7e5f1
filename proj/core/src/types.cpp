#include "airsparse/types.hpp"

#include <algorithm>
#include <cmath>

#include "airsparse/errors.hpp"

namespace airsparse {

Image::Image(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorKind::argument, "image data size does not match dims");
}

const char* to_string(ValueDomain domain) {
  switch (domain) {
    case ValueDomain::hu: return "HU";
    case ValueDomain::unit_normalized: return "unit_normalized";
    case ValueDomain::reconstruction: return "reconstruction";
  }
  return "unknown";
}

Image Volume3D::slice(std::size_t index) const {
  require(index < shape.slices, ErrorKind::range, "slice index out of bounds");
  const std::size_t plane = shape.rows * shape.cols;
  auto first = data.begin() + static_cast<std::ptrdiff_t>(index * plane);
  return Image(shape.rows, shape.cols, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane)));
}

void Volume3D::set_slice(std::size_t index, const Image& image) {
  require(index < shape.slices, ErrorKind::range, "slice index out of bounds");
  require(image.rows() == shape.rows && image.cols() == shape.cols, ErrorKind::argument,
          "slice dims do not match volume");
  std::copy(image.data().begin(), image.data().end(),
            data.begin() + static_cast<std::ptrdiff_t>(index * image.size()));
}

void Volume3D::validate() const {
  require(shape.slices >= 1 && shape.rows >= 1 && shape.cols >= 1, ErrorKind::argument,
          "volume dims must all be >= 1");
  require(data.size() == shape.count(), ErrorKind::argument, "volume data size does not match dims");
  for (double s : spacing_mm)
    require(s > 0.0 && std::isfinite(s), ErrorKind::argument, "voxel spacing must be positive");
  for (double v : data) require(std::isfinite(v), ErrorKind::argument, "volume contains non-finite values");
  if (domain == ValueDomain::unit_normalized) {
    for (double v : data)
      require(v >= 0.0 && v <= 1.0, ErrorKind::argument, "unit-normalized volume has values outside [0,1]");
  }
}

std::size_t MaskVolume::count_nonzero() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void MaskVolume::validate() const {
  require(shape.slices >= 1 && shape.rows >= 1 && shape.cols >= 1, ErrorKind::argument,
          "mask dims must all be >= 1");
  require(data.size() == shape.count(), ErrorKind::argument, "mask data size does not match dims");
  for (std::uint8_t v : data) require(v <= 1, ErrorKind::argument, "mask values must be exactly 0 or 1");
}

Dictionary::Dictionary(std::size_t count, std::size_t rows, std::size_t cols, std::vector<double> data)
    : count_(count), rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == count * rows * cols, ErrorKind::argument, "dictionary data size does not match dims");
}

Image Dictionary::atom_image(std::size_t k) const {
  auto a = atom(k);
  return Image(rows_, cols_, std::vector<double>(a.begin(), a.end()));
}

void Dictionary::set_atom(std::size_t k, const Image& atom_values) {
  require(atom_values.rows() == rows_ && atom_values.cols() == cols_, ErrorKind::argument,
          "atom dims do not match dictionary support");
  std::copy(atom_values.data().begin(), atom_values.data().end(), atom(k).begin());
}

void Dictionary::validate(double tol) const {
  require(count_ >= 1, ErrorKind::empty_dictionary, "dictionary has no atoms");
  require(rows_ >= 1 && cols_ >= 1, ErrorKind::argument, "atom support must be at least 1x1");
  for (std::size_t k = 0; k < count_; ++k) {
    for (double v : atom(k)) require(std::isfinite(v), ErrorKind::argument, "atom contains non-finite values");
    const double n = l2_norm(atom(k));
    if (std::abs(n - 1.0) > tol)
      fail(ErrorKind::argument, "atom " + std::to_string(k) + " has norm " + std::to_string(n) + ", expected 1");
  }
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace airsparse
