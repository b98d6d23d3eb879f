#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ladder/tensor.hpp"

namespace ladder {

/// Deterministic random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than with
/// <random>'s distribution classes, whose algorithms are
/// implementation-defined; this keeps streams identical across standard
/// libraries and platforms.
///
/// - uniform(): 53 high bits of one draw scaled to [0, 1).
/// - uniform_index(n): rejection sampling on the full 64-bit draw.
/// - normal(): Box-Muller, two draws per variate, no cached second value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  std::size_t uniform_index(std::size_t n);
  double normal();

  /// Tensor of i.i.d. N(0, stddev^2) values.
  Tensor normal_tensor(const Shape& shape, double stddev);

  /// Opaque engine state, restorable with set_state().
  std::string state() const;
  void set_state(std::uint64_t seed, const std::string& state);

  /// Seed for an independent child stream (SplitMix64 finalizer of seed ^ salt).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ladder
