#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace neckcalib {

/// Counter-based generator: the i-th output is a pure function of (key, i),
/// so a stream can be rebuilt anywhere from its key alone. Satisfies
/// UniformRandomBitGenerator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal();
  void fill_normal(std::span<double> out);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent stream for work item `index` under master `seed`.
CounterRng stream_for(std::uint64_t seed, std::uint64_t index) noexcept;
CounterRng stream_for(std::uint64_t seed, std::uint64_t index, std::uint64_t sub) noexcept;

}  // namespace neckcalib
