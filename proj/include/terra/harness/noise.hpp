#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace terra::harness {

/// Stateless Gaussian noise: each draw is a pure function of
/// (seed, channel, sample index), so streams are reproducible and do not
/// depend on generation order.
class CounterGaussian {
 public:
  explicit CounterGaussian(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Standard normal draw.
  double standard(std::uint32_t channel, std::uint64_t index) const {
    const std::uint64_t key = mix(seed_ ^ mix(0x9E3779B97F4A7C15ULL * (channel + 1)) ^ mix(index));
    const double u1 = to_unit(mix(key ^ 0xD1B54A32D192ED03ULL));
    const double u2 = to_unit(mix(key ^ 0x8CB92BA72F3D8DD7ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double draw(double sigma, std::uint32_t channel, std::uint64_t index) const {
    return sigma == 0.0 ? 0.0 : sigma * standard(channel, index);
  }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // (0, 1], never zero so the log is finite.
  static double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  std::uint64_t seed_;
};

}  // namespace terra::harness
