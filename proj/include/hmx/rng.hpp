#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hmx {

/// Seeded generator whose output is identical on every platform: the
/// standard distributions are implementation-defined, so uniforms are built
/// directly from the 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  /// Log-uniform on [lo, hi), lo > 0.
  double log_uniform(double lo, double hi) { return lo * std::exp(std::log(hi / lo) * uniform()); }

  double sign() { return (eng_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hmx
