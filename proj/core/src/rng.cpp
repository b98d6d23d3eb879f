#include "ladder/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ladder/error.hpp"

namespace ladder {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw PreconditionError("uniform_index(0)");
  const std::uint64_t bound = n;
  // Largest multiple of n representable; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor Rng::normal_tensor(const Shape& shape, double stddev) {
  Tensor t(shape);
  for (auto& v : t.data()) v = stddev * normal();
  return t;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(std::uint64_t seed, const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 engine;
  is >> engine;
  if (is.fail()) throw IoError("corrupt random generator state");
  seed_ = seed;
  engine_ = engine;
}

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (salt * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ladder
