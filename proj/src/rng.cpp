#include "mos/rng.hpp"

#include <cmath>
#include <numbers>

namespace mos {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double uniform_at(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(counter));
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

double normal_at(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t pair = counter >> 1;
  const double u1 = uniform_at(seed, 2 * pair);
  const double u2 = uniform_at(seed, 2 * pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (counter & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
}

}  // namespace mos
