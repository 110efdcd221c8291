#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vnet {

// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic per-component seed: one master seed fans out to named
// streams (env, init, noise, replay, shapley, eval, ...).
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) {
  std::uint64_t x = master ^ fnv1a(name);
  return splitmix64(x);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                 std::uint64_t index) {
  std::uint64_t x = master ^ fnv1a(name);
  x = splitmix64(x);
  x ^= 0x9e3779b97f4a7c15ULL * (index + 1);
  return splitmix64(x);
}

using Rng = std::mt19937_64;

}  // namespace vnet
