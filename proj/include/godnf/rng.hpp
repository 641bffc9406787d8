#pragma once

#include <cstdint>
#include <random>

#include "godnf/types.hpp"

namespace godnf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Decorrelated child seed for stream `index`; lets parallel runs draw from
/// independent generators while staying reproducible.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  state = out ^ (index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  out = splitmix64(state);
  return splitmix64(state) ^ out;
}

/// Uniform draw in [0, 1) with full 53-bit mantissa resolution.
inline Real uniform01(std::mt19937_64& eng) {
  return static_cast<Real>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace godnf
