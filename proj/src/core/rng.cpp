#include "rng.hpp"

namespace neckcalib {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

CounterRng::result_type CounterRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::normal() { return normal_(*this); }

void CounterRng::fill_normal(std::span<double> out) {
  for (double& x : out) x = normal();
}

CounterRng stream_for(std::uint64_t seed, std::uint64_t index) noexcept {
  return CounterRng(mix64(mix64(seed) ^ (index * kGamma + 0x632BE59BD9B4E019ull)));
}

CounterRng stream_for(std::uint64_t seed, std::uint64_t index, std::uint64_t sub) noexcept {
  return CounterRng(mix64(stream_for(seed, index).key() ^ mix64(sub + 0xD1B54A32D192ED03ull)));
}

}  // namespace neckcalib
