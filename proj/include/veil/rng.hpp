#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace veil {

// Seeded random source with distribution code written out by hand, so the
// same seed yields the same stream on every standard library (the std
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) {
      draw = engine_();
    }
    return static_cast<std::size_t>(draw % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Sub-seed offsets. Every random stream in a run is derived from the single
// run seed by adding one of these constants, so adding or removing one
// consumer (e.g. a discriminator) never shifts another consumer's stream.
namespace seed_offset {
inline constexpr std::uint64_t kEncoderInit = 1;
inline constexpr std::uint64_t kTaskHeadInit = 2;
inline constexpr std::uint64_t kDiscriminatorInit = 1000;  // + attribute slot
inline constexpr std::uint64_t kShuffle = 0;               // + epoch index
inline constexpr std::uint64_t kDropout = 1'000'003;       // * (step + 1)
inline constexpr std::uint64_t kAttacker = 7'919;
inline constexpr std::uint64_t kSplit = 31;
inline constexpr std::uint64_t kSubsample = 47;
inline constexpr std::uint64_t kSyntheticDev = 250;  // separately drawn dev split
inline constexpr std::uint64_t kPretrain = 104'729;
}  // namespace seed_offset

}  // namespace veil
