#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cvri {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from a root seed and a list of
// tags/indices. Used so that every (example, epoch, purpose) triple owns
// its own deterministic stream regardless of evaluation order.
inline std::uint64_t stream_seed(std::uint64_t root, std::initializer_list<std::uint64_t> words) {
  std::uint64_t s = root;
  splitmix64(s);
  for (std::uint64_t w : words) {
    s ^= w + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    splitmix64(s);
  }
  return splitmix64(s);
}

// Purpose tags for substreams.
inline constexpr std::uint64_t kStreamScene = 0x5343454eull;
inline constexpr std::uint64_t kStreamNoise = 0x4e4f4953ull;
inline constexpr std::uint64_t kStreamEval = 0x4556414cull;
inline constexpr std::uint64_t kStreamInit = 0x494e4954ull;

// mt19937_64 engine with hand-derived double/normal generation so streams are
// bit-reproducible across standard libraries (std distributions are not
// pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t n = static_cast<std::uint64_t>(hi - lo + 1);
    const std::uint64_t threshold = (-n) % n; // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return lo + static_cast<std::int64_t>(r % n);
    }
  }

  // Standard normal via Box-Muller; pairs are generated together and the
  // second value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kRngPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Standard complex Gaussian: real and imaginary parts each i.i.d. N(0, 1).
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

 private:
  static constexpr double kRngPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace cvri
