#pragma once

#include <cmath>
#include <cstdint>

#include "ltc/errors.hpp"

namespace ltc {

using RngSeed = std::uint64_t;

// Identifier stored in checkpoints and reports so runs can be replayed with
// the exact same sample stream.
inline constexpr const char* kRngAlgorithm = "splitmix64-boxmuller";

// splitmix64 stream with Box-Muller Gaussians on top. Chosen over the
// standard-library distributions because those are implementation-defined;
// this one produces the same doubles on every platform.
class Rng {
 public:
  explicit Rng(RngSeed seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal; the second value of each Box-Muller pair is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    // 1 - u1 is in (0, 1], so the log never hits -inf.
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double variance) {
    if (variance < 0.0) throw ParameterError("gaussian: variance must be >= 0");
    return mean + std::sqrt(variance) * next_gaussian();
  }

  // Derive an independent stream, e.g. one per trial.
  static RngSeed derive(RngSeed base, std::uint64_t index) {
    std::uint64_t z = base ^ (index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ltc
