#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ladder/tensor.hpp"

namespace ladder {

/// Element type codes of the HSICUBE1 array format.
enum class DType : std::uint8_t { f32 = 1, f64 = 2, u8 = 3 };

std::size_t dtype_size(DType t);
std::string to_string(DType t);
DType parse_dtype(const std::string& name);

/// An n-dimensional array as stored on disk; values are widened to double.
struct NdArray {
  Shape shape;
  DType dtype = DType::f64;
  std::vector<double> values;

  friend bool operator==(const NdArray&, const NdArray&) = default;
};

/// HSICUBE1 layout (all integers little-endian):
///
///   offset 0   8 bytes  magic "HSICUBE1"
///   offset 8   u32      ndim
///   offset 12  u32[ndim] dims
///   then       u8       dtype code (1 = float32, 2 = float64, 3 = uint8)
///   then       raw row-major element data, little-endian
std::string encode_array(const NdArray& array);
NdArray decode_array(const std::string& bytes);

NdArray read_array(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so a failed write leaves no partial file.
void write_array(const std::filesystem::path& path, const NdArray& array);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ladder
