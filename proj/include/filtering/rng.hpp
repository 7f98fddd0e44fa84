#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "filtering/types.hpp"

namespace filtering {

using Rng = std::mt19937_64;

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

/// Seed of an independent substream identified by (master seed, trial ids,
/// purpose tag). Streams never depend on scheduling order.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = detail::splitmix64(master ^ detail::fnv1a(tag));
  s = detail::splitmix64(s ^ detail::splitmix64(a + 0x632be59bd9b4e019ULL));
  s = detail::splitmix64(s ^ detail::splitmix64(b + 0x8cb92ba72f3d8dd7ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view tag,
                    std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(substream_seed(master, tag, a, b));
}

inline Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = gauss(rng);
  return x;
}

}  // namespace filtering
