#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fragkit {

using RandomStream = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream for one replica, keyed on (master seed, replica index) only, so
/// results do not depend on scheduling or worker count.
inline RandomStream replica_stream(std::uint64_t master_seed, std::uint64_t replica) {
  return RandomStream(splitmix64(splitmix64(master_seed) ^ splitmix64(replica + 0x632be59bd9b4e019ULL)));
}

/// Uniform on [0, 1) from the top 53 bits; identical across standard libraries.
inline double uniform01(RandomStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1).
inline double uniform_open(RandomStream& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(RandomStream& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace fragkit
