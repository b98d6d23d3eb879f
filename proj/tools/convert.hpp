#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ladder/array_file.hpp"

namespace ladder::cli {

/// Interleave of a 3-d raw dump. Dims are always given as rows, cols, bands.
///   bip: [rows][cols][bands]  (row-major, the HSICUBE1 order)
///   bil: [rows][bands][cols]
///   bsq: [bands][rows][cols]
enum class Interleave { bip, bil, bsq };

Interleave parse_interleave(const std::string& name);

struct RawLayout {
  std::vector<std::size_t> dims;
  DType dtype = DType::f64;
  Interleave order = Interleave::bip;
  bool big_endian = false;
};

/// Decodes a headerless dump. Throws DataError when the byte count differs
/// from product(dims) * sizeof(dtype), quoting both numbers.
NdArray decode_raw(const std::string& bytes, const RawLayout& layout);

/// Reads `input`, converts it to `output_dtype` and writes an HSICUBE1 file
/// atomically. Nothing is written when any check fails.
void convert_raw_file(const std::filesystem::path& input, const RawLayout& layout, DType output_dtype,
                      const std::filesystem::path& output);

std::vector<std::size_t> parse_dims(const std::string& text);

}  // namespace ladder::cli
