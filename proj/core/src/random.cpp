#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regpoison {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t state = splitmix64(master);
  for (std::uint64_t c : coords) {
    state = splitmix64(state ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
  }
  return state;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

namespace {

double snap(double x) noexcept {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
}

}  // namespace

std::size_t ceil_count(double fraction, std::size_t n) noexcept {
  const double x = snap(fraction * static_cast<double>(n));
  return x <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(x));
}

std::size_t floor_count(double value) noexcept {
  const double x = snap(value);
  return x <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(x));
}

}  // namespace regpoison
