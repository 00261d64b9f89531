#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace radioloc {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001B3ull;
  }
  return h;
}

inline constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b + kGolden) + (a << 6) + (a >> 2)));
}

}  // namespace detail

// Counter-based generator with cheap, collision-resistant splitting.
// Streams derived by name or index are statistically independent and the
// whole tree is a pure function of the root seed, so every random draw in
// the pipeline is reproducible from the CLI seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(detail::mix64(seed + detail::kGolden)) {}

  Rng stream(std::string_view label) const {
    return Rng(key_tag{}, detail::combine(key_, detail::fnv1a(label)));
  }

  Rng stream(std::uint64_t index) const {
    return Rng(key_tag{}, detail::combine(key_, detail::mix64(index + 1)));
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; consumes exactly two draws
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  struct key_tag {};
  Rng(key_tag, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace radioloc
