#pragma once

#include <cstdint>

namespace crowdmf {

// Generator identity recorded in every output file. The simulator draws
// exactly two uniforms per event: first the holding time, then one
// inverse-CDF lookup on the flattened (origin,destination) rate vector.
inline constexpr const char* kRngName = "splitmix64";

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the whole stream is
// a pure function of the 64-bit seed, so traces reproduce across platforms
// and implementations without depending on library distributions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace crowdmf
