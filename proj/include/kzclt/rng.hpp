#pragma once
// Deterministic random streams.
//
// Every random quantity in the toolkit is drawn from an Rng constructed as
// Rng(seed, purpose, index): `purpose` is a fixed tag for the use site
// (radial noise, angular noise, bootstrap, ...) and `index` is the path or
// task number within that purpose.  The (seed, purpose, index) triple is
// hashed through SplitMix64 into a xoshiro256++ state, so
//   * identical triples reproduce bit-identical sequences,
//   * adding a new purpose or more paths never perturbs existing streams,
//   * per-path streams can be consumed from worker threads in any order.

#include <array>
#include <cmath>
#include <cstdint>

namespace kzclt {

inline std::uint64_t splitmix64_step(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream purposes.  Keep the values stable: they are part of the
// reproducibility contract (a report produced at seed S must be
// reconstructible by later versions).
namespace purpose {
inline constexpr std::uint64_t radial = 1;      // W^(1) increments
inline constexpr std::uint64_t angular = 2;     // W^(2) increments
inline constexpr std::uint64_t frame = 3;       // fiber frame sampling
inline constexpr std::uint64_t direction = 4;   // geodesic direction theta
inline constexpr std::uint64_t burnin = 5;      // base-point burn-in noise
inline constexpr std::uint64_t bootstrap = 6;   // bootstrap resampling
inline constexpr std::uint64_t calibrate = 7;   // lambda calibration orbit
inline constexpr std::uint64_t generic = 8;     // tests, misc sampling
}  // namespace purpose

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t purpose_tag, std::uint64_t index) {
    std::uint64_t x = seed;
    (void)splitmix64_step(x);
    x ^= 0xa0761d6478bd642fULL * (purpose_tag + 1);
    (void)splitmix64_step(x);
    x ^= 0xe7037ed1a0b428dbULL * (index + 1);
    for (auto& w : s_) w = splitmix64_step(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via the Marsaglia polar method (second value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Uniform integer in [0, n).  Unbiased via rejection on the top range.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kzclt
