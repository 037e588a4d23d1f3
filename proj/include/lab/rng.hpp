#pragma once

#include <cstdint>

namespace lab::rng {

// All randomness in the lab derives from the splitmix64 finalizer below.  The
// scheme is fixed and documented in the README: results must be reproducible
// across machines and worker counts, so nothing here may ever change.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Seed of Monte Carlo sample i under root seed r.  The +1 keeps sample 0 from
// collapsing onto the root seed itself.
inline constexpr std::uint64_t sample_seed(std::uint64_t root, std::uint64_t i) {
  return mix64(root ^ (kGolden * (i + 1)));
}

// Map a (possibly negative) cell index to a distinct non-negative key.
inline constexpr std::uint64_t zigzag(std::int64_t n) {
  return n >= 0 ? 2ull * static_cast<std::uint64_t>(n)
                : 2ull * static_cast<std::uint64_t>(-(n + 1)) + 1ull;
}

// Key for the disorder value of cell n under a given sample seed.  A pure
// function of (seed, n): enlarging a realization window never changes the
// values on cells it already covered.
inline constexpr std::uint64_t cell_key(std::uint64_t seed, std::int64_t n) {
  return mix64(seed ^ (kGolden * (zigzag(n) + 0x51ED2701ull)));
}

// Turn a 64-bit hash into a double in [0,1) using the top 53 bits.
inline constexpr double to_u01(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Counter-based stream for auxiliary per-sample draws (initial angles,
// directions).  Deterministic and platform-independent; std distributions are
// deliberately avoided because their output is not pinned by the standard.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  double u01() { return to_u01(next()); }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

 private:
  std::uint64_t state_;
};

}  // namespace lab::rng
