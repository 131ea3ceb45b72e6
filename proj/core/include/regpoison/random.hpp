#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace regpoison {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable 64-bit hash of a string (FNV-1a), used to fold names into seeds.
std::uint64_t hash_name(std::string_view name) noexcept;

/// Derives an independent stream seed from a master seed and a tuple of
/// coordinates. Each coordinate is folded through splitmix64 so that
/// permuted coordinates give different seeds.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept;

/// Identity permutation of [0, n) shuffled by a generator seeded with `seed`.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// ceil(fraction * n), immune to the representation error of decimal
/// fractions (0.04 * 1200 must give 48, not 49).
std::size_t ceil_count(double fraction, std::size_t n) noexcept;

/// floor(value) with the same snapping as ceil_count.
std::size_t floor_count(double value) noexcept;

}  // namespace regpoison
