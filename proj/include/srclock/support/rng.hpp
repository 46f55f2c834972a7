#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

#include "srclock/support/format.hpp"

namespace srclock {

using Rng = std::mt19937_64;

/// Independent, reproducible seed for a named consumer of the global seed.
inline std::uint64_t substream_seed(std::uint64_t globalSeed, std::string_view name,
                                    std::uint64_t index = 0) {
  std::uint64_t h = fnv1a(name);
  h ^= globalSeed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline Rng make_rng(std::uint64_t globalSeed, std::string_view name, std::uint64_t index = 0) {
  return Rng(substream_seed(globalSeed, name, index));
}

}  // namespace srclock
