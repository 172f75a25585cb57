#include "cag/seed.hpp"

namespace cag {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view device, std::uint64_t branch,
                          std::uint64_t index) noexcept {
  std::uint64_t h = mix64(global_seed);
  h = mix64(h ^ fnv1a64(device));
  h = mix64(h ^ branch);
  return mix64(h ^ index);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(mix64(seed) ^ salt);
}

}  // namespace cag
