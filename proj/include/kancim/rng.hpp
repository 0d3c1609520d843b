#ifndef KANCIM_RNG_HPP_
#define KANCIM_RNG_HPP_

#include <cstdint>
#include <random>

namespace kancim {

// splitmix64 step; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a068e31afd35ULL;
  return z ^ (z >> 31);
}

// Derive an independent sub-stream key from a root seed and up to three
// work-unit coordinates (column, trial, segment, ...). Every stochastic
// draw in the simulator is keyed this way, so results do not depend on
// thread count or evaluation order.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t k = mix64(root ^ 0x6a09e667f3bcc909ULL);
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  k = mix64(k ^ c);
  return k;
}

inline std::mt19937_64 make_rng(std::uint64_t key) { return std::mt19937_64(key); }

// Single standard-normal draw from a fresh stream at `key`. Used where
// one keyed draw decides a physical quantity (word-line noise sample,
// device variation factor) so reference implementations can reproduce
// the exact value from the key alone.
inline double unit_normal(std::uint64_t key) {
  std::mt19937_64 rng = make_rng(key);
  std::normal_distribution<double> gauss(0.0, 1.0);
  return gauss(rng);
}

}  // namespace kancim

#endif
