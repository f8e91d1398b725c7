#pragma once

#include <cstdint>
#include <vector>

namespace difflab {

// Splittable counter-based generator (splitmix64 core, 64-bit state).
// Every randomized routine takes an Rng explicitly; a fixed seed plus a
// fixed call sequence reproduces bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();

  // Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi);

  // Standard normal via Box-Muller; pairs are cached.
  double normal();

  std::vector<double> normal_vec(std::size_t n);

  // Child stream; advances this generator.
  Rng split();

  // Keyed child stream; leaves this generator untouched. stream(k) for
  // distinct k gives decorrelated streams regardless of draw order.
  Rng stream(std::uint64_t key) const;

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace difflab
