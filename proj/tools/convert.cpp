#include "convert.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "ladder/error.hpp"

namespace ladder::cli {
namespace {

template <class T>
T load(const char* p, bool swap) {
  char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if (swap) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

Interleave parse_interleave(const std::string& name) {
  if (name == "bip") return Interleave::bip;
  if (name == "bil") return Interleave::bil;
  if (name == "bsq") return Interleave::bsq;
  throw ConfigError("--order must be one of bip, bil, bsq (got '" + name + "')");
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || v == 0) throw ConfigError("--dims must be positive integers like 610,340,103");
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty() || dims.size() > 3) throw ConfigError("--dims needs one to three entries");
  return dims;
}

NdArray decode_raw(const std::string& bytes, const RawLayout& layout) {
  if (layout.order != Interleave::bip && layout.dims.size() != 3) {
    throw ConfigError("--order bil/bsq applies to 3-d cubes only");
  }
  const std::size_t n = std::accumulate(layout.dims.begin(), layout.dims.end(), std::size_t{1}, std::multiplies<>());
  const std::size_t esize = dtype_size(layout.dtype);
  if (bytes.size() != n * esize) {
    throw DataError("raw input has " + std::to_string(bytes.size()) + " bytes but dims and dtype need " +
                    std::to_string(n * esize) + " bytes");
  }
  std::vector<double> flat(n);
  const char* p = bytes.data();
  const bool swap = layout.big_endian;
  for (std::size_t i = 0; i < n; ++i, p += esize) {
    switch (layout.dtype) {
      case DType::f32: flat[i] = load<float>(p, swap); break;
      case DType::f64: flat[i] = load<double>(p, swap); break;
      case DType::u8: flat[i] = static_cast<unsigned char>(*p); break;
    }
  }
  NdArray out;
  out.shape = layout.dims;
  out.dtype = layout.dtype;
  if (layout.order == Interleave::bip) {
    out.values = std::move(flat);
    return out;
  }
  const std::size_t rows = layout.dims[0], cols = layout.dims[1], bands = layout.dims[2];
  out.values.resize(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t b = 0; b < bands; ++b) {
        const std::size_t src = layout.order == Interleave::bil ? (r * bands + b) * cols + c : (b * rows + r) * cols + c;
        out.values[(r * cols + c) * bands + b] = flat[src];
      }
    }
  }
  return out;
}

void convert_raw_file(const std::filesystem::path& input, const RawLayout& layout, DType output_dtype,
                      const std::filesystem::path& output) {
  NdArray array = decode_raw(read_file_bytes(input), layout);
  if (output_dtype == DType::u8) {
    for (double v : array.values) {
      if (!(v >= 0.0 && v <= 255.0 && v == std::floor(v))) {
        throw DataError("value " + std::to_string(v) + " cannot be stored as u8");
      }
    }
  }
  array.dtype = output_dtype;
  write_array(output, array);
}

}  // namespace ladder::cli
