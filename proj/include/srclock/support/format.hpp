#pragma once

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "srclock/atoms.hpp"

namespace srclock {

/// Shortest text that round-trips a double exactly (17 significant digits).
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// 64-bit FNV-1a; stable across platforms, used for content fingerprints.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string to_hex(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

inline std::string constants_hash(const PhysicalConstants& c) {
  std::string canon;
  for (double v : {c.b0Gauss, c.omegaBPerGauss, c.mu0gSPerGauss, c.mu0gPPerGauss, c.omegaD,
                   c.rabiPeak, c.wavelength, c.atomMass}) {
    canon += format_double(v);
    canon += ';';
  }
  return to_hex(fnv1a(canon));
}

}  // namespace srclock
