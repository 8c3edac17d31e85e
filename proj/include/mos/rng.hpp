#pragma once

#include <cstdint>

namespace mos {

// Counter-based generation: every draw is a pure function of (seed, counter),
// so trials and samples can be produced in any order or on any worker.

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the `index`-th child stream of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Uniform in (0, 1].
double uniform_at(std::uint64_t seed, std::uint64_t counter);

/// Standard normal variate number `counter` of stream `seed` (Box-Muller on
/// counter pairs).
double normal_at(std::uint64_t seed, std::uint64_t counter);

/// Sequential view over a counter-based stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : seed_(seed) {}
  double operator()() { return normal_at(seed_, counter_++); }
  double uniform() { return uniform_at(derive_seed(seed_, 0x5eedULL), counter_++); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace mos
