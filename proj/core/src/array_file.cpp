#include "ladder/array_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ladder/error.hpp"

namespace ladder {
namespace {

constexpr char kMagic[8] = {'H', 'S', 'I', 'C', 'U', 'B', 'E', '1'};

static_assert(std::endian::native == std::endian::little, "HSICUBE1 I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("HSICUBE1: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
  }
  throw IoError("unsupported dtype code " + std::to_string(static_cast<int>(t)));
}

std::string to_string(DType t) {
  switch (t) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::u8: return "u8";
  }
  return "?";
}

DType parse_dtype(const std::string& name) {
  if (name == "f32" || name == "float32") return DType::f32;
  if (name == "f64" || name == "float64") return DType::f64;
  if (name == "u8" || name == "uint8") return DType::u8;
  throw ConfigError("unsupported dtype '" + name + "' (expected f32, f64 or u8)");
}

std::string encode_array(const NdArray& array) {
  if (numel(array.shape) != array.values.size()) {
    throw DimensionError("array shape " + to_string(array.shape) + " does not match " + std::to_string(array.values.size()) +
                         " values");
  }
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(array.shape.size()));
  for (auto d : array.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(array.dtype));
  out.reserve(out.size() + array.values.size() * dtype_size(array.dtype));
  for (double v : array.values) {
    switch (array.dtype) {
      case DType::f32: put<float>(out, static_cast<float>(v)); break;
      case DType::f64: put<double>(out, v); break;
      case DType::u8:
        if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) throw DataError("value " + std::to_string(v) + " is not a uint8");
        put<std::uint8_t>(out, static_cast<std::uint8_t>(v));
        break;
    }
  }
  return out;
}

NdArray decode_array(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not an HSICUBE1 file (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  NdArray a;
  const auto ndim = get<std::uint32_t>(bytes, pos);
  if (ndim == 0 || ndim > 8) throw IoError("HSICUBE1: unsupported ndim " + std::to_string(ndim));
  for (std::uint32_t i = 0; i < ndim; ++i) a.shape.push_back(get<std::uint32_t>(bytes, pos));
  const auto code = get<std::uint8_t>(bytes, pos);
  if (code < 1 || code > 3) throw IoError("HSICUBE1: unsupported dtype code " + std::to_string(code));
  a.dtype = static_cast<DType>(code);
  const std::size_t n = numel(a.shape);
  if (bytes.size() - pos != n * dtype_size(a.dtype)) {
    throw IoError("HSICUBE1: expected " + std::to_string(n * dtype_size(a.dtype)) + " data bytes, found " +
                  std::to_string(bytes.size() - pos));
  }
  a.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (a.dtype) {
      case DType::f32: a.values[i] = get<float>(bytes, pos); break;
      case DType::f64: a.values[i] = get<double>(bytes, pos); break;
      case DType::u8: a.values[i] = get<std::uint8_t>(bytes, pos); break;
    }
  }
  return a;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

NdArray read_array(const std::filesystem::path& path) { return decode_array(read_file_bytes(path)); }

void write_array(const std::filesystem::path& path, const NdArray& array) { write_file_atomic(path, encode_array(array)); }

}  // namespace ladder
