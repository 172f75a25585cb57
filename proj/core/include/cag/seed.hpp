#pragma once

#include <cstdint>
#include <string_view>

namespace cag {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a of the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Child seed for one unit of work. Stable across platforms and independent
/// of scheduling order:
///   mix64(mix64(mix64(mix64(global) ^ fnv1a64(device)) ^ branch) ^ index)
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view device, std::uint64_t branch,
                          std::uint64_t index) noexcept;

/// Shorthand for seeds that only need a numeric salt.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace cag
