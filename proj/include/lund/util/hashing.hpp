#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace lund {

// 64-bit FNV-1a. Used for content fingerprints and configuration hashes;
// stable across platforms and runs.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view hex);

std::uint32_t crc32(std::span<const unsigned char> data);
std::uint32_t crc32(std::string_view data);

}  // namespace lund
