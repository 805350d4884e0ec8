#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gf {

// splitmix64 finalizer; decorrelates nearby seeds
std::uint64_t mix64(std::uint64_t z);

// Deterministic named stream: (seed, label) -> independent generator.
// Gaussians come from an explicit Box-Muller on top of the engine's bits so
// the sequence is identical across standard library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t bits();
  std::uint64_t below(std::uint64_t n);  // unbiased draw from {0,...,n-1}
  double uniform();                      // [0, 1)
  double normal();                       // standard normal

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gf
