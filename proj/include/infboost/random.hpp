#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace infboost {

// Seeded random stream. All draws are derived from raw 64-bit engine output
// so that results do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for (seed, stream_id); used to give every tree its own
  // generator so that results do not depend on scheduling.
  static Rng derive(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform01();

  double normal();

  // First k entries of a Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace infboost
