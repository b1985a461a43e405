#pragma once

#include <cstdint>
#include <vector>

namespace binlite {

// splitmix64 step; also used to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Small deterministic generator. The standard <random> distributions are
// implementation-defined, so everything that must reproduce bit-exactly
// (weight init, shuffles, dropout masks, augmentation draws) goes through
// this instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Uniform integer in [0, n). Modulo bias is negligible for our n.
  std::uint64_t uniform_int(std::uint64_t n) { return n ? next() % n : 0; }

  // Derive an independent child seed for stream `stream`.
  std::uint64_t child_seed(std::uint64_t stream) const {
    std::uint64_t s = state_ ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
  }

private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  std::uint64_t s = a;
  splitmix64(s);
  s ^= b + 0x9e3779b97f4a7c15ULL;
  splitmix64(s);
  s ^= c + 0xc2b2ae3d27d4eb4fULL;
  return splitmix64(s);
}

// In-place Fisher-Yates shuffle with a fixed draw order.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

} // namespace binlite
