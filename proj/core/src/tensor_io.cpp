#include "airsparse/tensor_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "airsparse/errors.hpp"
#include "json.hpp"

namespace airsparse {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

std::string path_context(const std::filesystem::path& path) { return " (" + path.string() + ")"; }

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open file for reading" + path_context(path));
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open file for writing" + path_context(path));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed" + path_context(path));
}

// Minimal reader for the Python dict literal in an NPY header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string text) : text_(std::move(text)) {}

  std::string value_after(const std::string& key) const {
    const std::string quoted_single = "'" + key + "'";
    const std::string quoted_double = "\"" + key + "\"";
    std::size_t pos = text_.find(quoted_single);
    std::size_t len = quoted_single.size();
    if (pos == std::string::npos) {
      pos = text_.find(quoted_double);
      len = quoted_double.size();
    }
    if (pos == std::string::npos) fail(ErrorKind::format, "NPY header lacks key '" + key + "'");
    pos = text_.find(':', pos + len);
    if (pos == std::string::npos) fail(ErrorKind::format, "NPY header malformed near '" + key + "'");
    ++pos;
    while (pos < text_.size() && text_[pos] == ' ') ++pos;
    if (pos >= text_.size()) fail(ErrorKind::format, "NPY header truncated");
    std::size_t end = pos;
    if (text_[pos] == '\'' || text_[pos] == '"') {
      end = text_.find(text_[pos], pos + 1);
      if (end == std::string::npos) fail(ErrorKind::format, "unterminated string in NPY header");
      return text_.substr(pos + 1, end - pos - 1);
    }
    if (text_[pos] == '(') {
      end = text_.find(')', pos);
      if (end == std::string::npos) fail(ErrorKind::format, "unterminated shape tuple in NPY header");
      return text_.substr(pos, end - pos + 1);
    }
    while (end < text_.size() && text_[end] != ',' && text_[end] != '}') ++end;
    std::string value = text_.substr(pos, end - pos);
    while (!value.empty() && value.back() == ' ') value.pop_back();
    return value;
  }

 private:
  std::string text_;
};

DType parse_descr(const std::string& descr) {
  if (descr == "<f4") return DType::float32;
  if (descr == "<f8") return DType::float64;
  if (descr == "|u1" || descr == "<u1" || descr == "u1") return DType::uint8;
  if (descr == "<i2") return DType::int16;
  fail(ErrorKind::format, "unsupported NPY dtype '" + descr + "'");
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  std::vector<std::size_t> shape;
  std::string inner = tuple.substr(1, tuple.size() - 2);
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    if (item.empty()) continue;
    if (!item.empty() && item.back() == 'L') item.pop_back();
    std::size_t value = 0;
    try {
      std::size_t consumed = 0;
      value = std::stoull(item, &consumed);
      if (consumed != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::format, "invalid NPY shape entry '" + item + "'");
    }
    shape.push_back(value);
  }
  return shape;
}

void check_shape(const std::vector<std::size_t>& shape) {
  require(!shape.empty(), ErrorKind::argument, "array has no dimensions");
  for (std::size_t d : shape) require(d >= 1, ErrorKind::argument, "array has an empty dimension");
}

template <class T>
T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

Shape3 as_shape3(const std::vector<std::size_t>& shape, const std::filesystem::path& path) {
  if (shape.size() == 3) return {shape[0], shape[1], shape[2]};
  if (shape.size() == 2) return {1, shape[0], shape[1]};
  fail(ErrorKind::format, "expected a 2D or 3D array" + path_context(path));
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::float32: return 4;
    case DType::float64: return 8;
    case DType::uint8: return 1;
    case DType::int16: return 2;
  }
  return 0;
}

std::string dtype_descr(DType dtype) {
  switch (dtype) {
    case DType::float32: return "<f4";
    case DType::float64: return "<f8";
    case DType::uint8: return "|u1";
    case DType::int16: return "<i2";
  }
  return "";
}

std::size_t NpyArray::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::vector<double> NpyArray::to_doubles() const {
  const std::size_t n = element_count();
  const std::size_t width = dtype_size(dtype);
  require(payload.size() == n * width, ErrorKind::format, "NPY payload size does not match shape");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* p = payload.data() + i * width;
    switch (dtype) {
      case DType::float32: out[i] = static_cast<double>(load_le<float>(p)); break;
      case DType::float64: out[i] = load_le<double>(p); break;
      case DType::uint8: out[i] = static_cast<double>(load_le<std::uint8_t>(p)); break;
      case DType::int16: out[i] = static_cast<double>(load_le<std::int16_t>(p)); break;
    }
  }
  return out;
}

NpyArray NpyArray::from_doubles(std::vector<std::size_t> shape, std::span<const double> values) {
  NpyArray a;
  a.shape = std::move(shape);
  a.dtype = DType::float64;
  require(values.size() == a.element_count(), ErrorKind::argument, "value count does not match shape");
  a.payload.resize(values.size() * sizeof(double));
  std::memcpy(a.payload.data(), values.data(), a.payload.size());
  return a;
}

NpyArray NpyArray::from_bytes(std::vector<std::size_t> shape, std::span<const std::uint8_t> values) {
  NpyArray a;
  a.shape = std::move(shape);
  a.dtype = DType::uint8;
  require(values.size() == a.element_count(), ErrorKind::argument, "value count does not match shape");
  a.payload.resize(values.size());
  std::memcpy(a.payload.data(), values.data(), values.size());
  return a;
}

NpyArray parse_npy(std::span<const std::byte> bytes) {
  require(bytes.size() >= 10 && std::memcmp(bytes.data(), kMagic, kMagicLen) == 0, ErrorKind::format,
          "missing NPY magic string");
  const auto major = static_cast<unsigned>(bytes[6]);
  const auto minor = static_cast<unsigned>(bytes[7]);
  require(minor == 0 && (major == 1 || major == 2), ErrorKind::format,
          "unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    header_len = load_le<std::uint16_t>(bytes.data() + 8);
    prefix = 10;
  } else {
    require(bytes.size() >= 12, ErrorKind::format, "truncated NPY preamble");
    header_len = load_le<std::uint32_t>(bytes.data() + 8);
    prefix = 12;
  }
  require(bytes.size() >= prefix + header_len, ErrorKind::format, "truncated NPY header");
  std::string header(reinterpret_cast<const char*>(bytes.data() + prefix), header_len);
  HeaderParser parser(header);

  const std::string fortran = parser.value_after("fortran_order");
  if (fortran == "True") fail(ErrorKind::unsupported_layout, "Fortran-order arrays are not supported");
  require(fortran == "False", ErrorKind::format, "invalid fortran_order value '" + fortran + "'");

  NpyArray array;
  array.dtype = parse_descr(parser.value_after("descr"));
  const std::string shape = parser.value_after("shape");
  require(shape.size() >= 2 && shape.front() == '(' && shape.back() == ')', ErrorKind::format,
          "invalid shape tuple in NPY header");
  array.shape = parse_shape(shape);

  const std::size_t expected = array.element_count() * dtype_size(array.dtype);
  const std::size_t offset = prefix + header_len;
  require(bytes.size() - offset == expected, ErrorKind::format,
          "NPY payload has " + std::to_string(bytes.size() - offset) + " bytes, expected " + std::to_string(expected));
  array.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return array;
}

NpyArray read_npy(const std::filesystem::path& path) {
  try {
    return parse_npy(read_file(path));
  } catch (Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), e.message() + path_context(path));
  }
}

std::vector<std::byte> serialize_npy(const NpyArray& array) {
  check_shape(array.shape);
  require(array.payload.size() == array.element_count() * dtype_size(array.dtype), ErrorKind::argument,
          "payload size does not match shape");
  if (array.dtype == DType::float32 || array.dtype == DType::float64) {
    for (double v : array.to_doubles()) require(std::isfinite(v), ErrorKind::argument, "array contains non-finite values");
  }

  std::string header = "{'descr': '" + dtype_descr(array.dtype) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    if (i > 0) header += ", ";
    header += std::to_string(array.shape[i]);
  }
  if (array.shape.size() == 1) header += ",";
  header += "), }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  require(header.size() <= 0xFFFF, ErrorKind::argument, "NPY header too long for format 1.0");

  std::vector<std::byte> out;
  out.reserve(10 + header.size() + array.payload.size());
  for (std::size_t i = 0; i < kMagicLen; ++i) out.push_back(static_cast<std::byte>(kMagic[i]));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  const auto len = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<std::byte>(len & 0xFF));
  out.push_back(static_cast<std::byte>(len >> 8));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  out.insert(out.end(), array.payload.begin(), array.payload.end());
  return out;
}

void write_npy(const NpyArray& array, const std::filesystem::path& path) {
  std::vector<std::byte> bytes;
  try {
    bytes = serialize_npy(array);
  } catch (Error& e) {
    throw Error(e.kind(), e.message() + path_context(path));
  }
  write_file(path, bytes);
}

Volume3D load_volume(const std::filesystem::path& path, ValueDomain domain) {
  NpyArray array = read_npy(path);
  Volume3D volume;
  volume.shape = as_shape3(array.shape, path);
  volume.data = array.to_doubles();
  volume.domain = domain;
  volume.origin_label = path.filename().string();
  try {
    volume.validate();
  } catch (Error& e) {
    throw Error(e.kind(), e.message() + path_context(path));
  }
  return volume;
}

void save_volume(const Volume3D& volume, const std::filesystem::path& path) {
  volume.validate();
  write_npy(NpyArray::from_doubles({volume.shape.slices, volume.shape.rows, volume.shape.cols}, volume.data), path);
}

MaskVolume load_mask(const std::filesystem::path& path) {
  NpyArray array = read_npy(path);
  MaskVolume mask;
  mask.shape = as_shape3(array.shape, path);
  const auto values = array.to_doubles();
  mask.data.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0 && values[i] != 1.0)
      fail(ErrorKind::argument, "mask value " + std::to_string(values[i]) + " is not 0 or 1" + path_context(path));
    mask.data[i] = static_cast<std::uint8_t>(values[i]);
  }
  return mask;
}

void save_mask(const MaskVolume& mask, const std::filesystem::path& path) {
  mask.validate();
  write_npy(NpyArray::from_bytes({mask.shape.slices, mask.shape.rows, mask.shape.cols}, mask.data), path);
}

void save_dictionary(const DictionaryFile& file, const std::filesystem::path& dir) {
  const Dictionary& d = file.atoms;
  d.validate();
  std::filesystem::create_directories(dir);
  write_npy(NpyArray::from_doubles({d.count(), d.atom_rows(), d.atom_cols()}, d.values()), dir / "dict.npy");

  nlohmann::json meta = {
      {"atom_count", d.count()},
      {"support_h", d.atom_rows()},
      {"support_w", d.atom_cols()},
      {"lambda_used", file.meta.lambda_used},
      {"seed", file.meta.seed},
      {"notes", file.meta.notes},
  };
  const std::string text = meta.dump(2) + "\n";
  write_file(dir / "dict.json", std::as_bytes(std::span(text.data(), text.size())));
}

DictionaryFile load_dictionary(const std::filesystem::path& dir) {
  NpyArray array = read_npy(dir / "dict.npy");
  require(array.shape.size() == 3, ErrorKind::format, "dictionary array must be K x h x w" + path_context(dir));
  DictionaryFile file;
  file.atoms = Dictionary(array.shape[0], array.shape[1], array.shape[2], array.to_doubles());
  try {
    file.atoms.validate();
  } catch (Error& e) {
    throw Error(e.kind(), e.message() + path_context(dir));
  }

  const auto bytes = read_file(dir / "dict.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(reinterpret_cast<const char*>(bytes.data()),
                                 reinterpret_cast<const char*>(bytes.data()) + bytes.size());
    file.meta.atom_count = meta.at("atom_count").get<std::size_t>();
    file.meta.support_h = meta.at("support_h").get<std::size_t>();
    file.meta.support_w = meta.at("support_w").get<std::size_t>();
    file.meta.lambda_used = meta.at("lambda_used").get<double>();
    file.meta.seed = meta.at("seed").get<std::uint64_t>();
    if (meta.contains("notes")) file.meta.notes = meta.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("invalid dictionary sidecar: ") + e.what() + path_context(dir));
  }
  require(file.meta.atom_count == file.atoms.count() && file.meta.support_h == file.atoms.atom_rows() &&
              file.meta.support_w == file.atoms.atom_cols(),
          ErrorKind::format, "dictionary sidecar disagrees with dict.npy" + path_context(dir));
  return file;
}

Axis parse_axis(const std::string& name) {
  if (name == "axial") return Axis::axial;
  if (name == "coronal") return Axis::coronal;
  if (name == "sagittal") return Axis::sagittal;
  fail(ErrorKind::argument, "unknown axis '" + name + "'");
}

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::axial: return "axial";
    case Axis::coronal: return "coronal";
    case Axis::sagittal: return "sagittal";
  }
  return "unknown";
}

Image extract_plane(const Volume3D& volume, Axis axis, std::size_t index) {
  const Shape3 s = volume.shape;
  switch (axis) {
    case Axis::axial:
      require(index < s.slices, ErrorKind::range, "axial index out of bounds");
      return volume.slice(index);
    case Axis::coronal: {
      require(index < s.rows, ErrorKind::range, "coronal index out of bounds");
      Image plane(s.slices, s.cols);
      for (std::size_t z = 0; z < s.slices; ++z)
        for (std::size_t c = 0; c < s.cols; ++c) plane(z, c) = volume.at(z, index, c);
      return plane;
    }
    case Axis::sagittal: {
      require(index < s.cols, ErrorKind::range, "sagittal index out of bounds");
      Image plane(s.slices, s.rows);
      for (std::size_t z = 0; z < s.slices; ++z)
        for (std::size_t r = 0; r < s.rows; ++r) plane(z, r) = volume.at(z, r, index);
      return plane;
    }
  }
  fail(ErrorKind::argument, "unknown axis");
}

std::vector<std::uint8_t> window_to_gray(const Image& plane, double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::argument, "window requires lo < hi");
  std::vector<std::uint8_t> pixels(plane.size());
  const double width = hi - lo;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    // Multiply before dividing so that the exact midpoint lands on 127.5.
    const double v = std::clamp((plane.data()[i] - lo) * 255.0 / width, 0.0, 255.0);
    pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return pixels;
}

void write_png_gray(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> pixels) {
  require(pixels.size() == rows * cols, ErrorKind::argument, "pixel count does not match image dims");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(cols);
  image.height = static_cast<png_uint_32>(rows);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), static_cast<png_int_32>(cols), nullptr)) {
    const std::string reason = image.message;
    png_image_free(&image);
    fail(ErrorKind::io, "PNG write failed: " + reason + path_context(path));
  }
}

void render_slice(const Volume3D& volume, Axis axis, std::size_t index, std::array<double, 2> window,
                  const std::filesystem::path& path) {
  const Image plane = extract_plane(volume, axis, index);
  const auto pixels = window_to_gray(plane, window[0], window[1]);
  write_png_gray(path, plane.rows(), plane.cols(), pixels);
}

}  // namespace airsparse
