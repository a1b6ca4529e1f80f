#pragma once

#include <cstdint>
#include <initializer_list>

namespace hetfl {

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a named stream; each (base, path) gets an independent seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(base);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x5851f42d4c957f2dULL));
  return s;
}

// Stream tags used with derive_seed.
namespace stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t partition = 3;
inline constexpr std::uint64_t noise = 4;
inline constexpr std::uint64_t model = 5;
inline constexpr std::uint64_t shuffle = 6;
}  // namespace stream

}  // namespace hetfl
