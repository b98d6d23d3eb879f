#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ladder/adam.hpp"
#include "ladder/model.hpp"
#include "ladder/rng.hpp"

namespace ladder {

/// Training state snapshot.
///
/// LADCKPT1 layout, integers little-endian:
///
///   "LADCKPT1"                      8 bytes
///   u32 version (= 1)
///   u64 iteration
///   i64 adam step count
///   u64 rng seed
///   u32 n, n bytes                  random engine state (text)
///   u32 tensor count
///   per tensor: u32 name length, name bytes, u32 rank, u32 dims[rank],
///               f64 values[prod(dims)]
///
/// Tensor names: parameter names ("encoder.1.weight", ...), running
/// statistics ("encoder.1.running_mean" / "running_var"), Adam moments
/// ("adam.m.<param>" / "adam.v.<param>").
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t iteration = 0;
  std::int64_t adam_steps = 0;
  std::uint64_t rng_seed = 0;
  std::string rng_state;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& find(const std::string& name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint capture_checkpoint(const LadderParams& params, const Adam& adam, const Rng& rng, std::uint64_t iteration);
/// Restores parameter values and running statistics (and optimizer/rng state when given).
void restore_checkpoint(const Checkpoint& ckpt, LadderParams& params, Adam* adam = nullptr, Rng* rng = nullptr);

}  // namespace ladder
