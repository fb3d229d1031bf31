#include "lorentz/rng.hpp"

#include <cmath>

namespace lorentz {

Stream::Stream(std::uint64_t seed, std::array<std::uint32_t, 3> id)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{id[0], id[1], id[2], 0u} {}

double Stream::exponential(double mean) { return -mean * std::log(uniform()); }

double Stream::normal() {
  const double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

unsigned Stream::poisson(double mean) {
  const double u = uniform();
  double p = std::exp(-mean), cdf = p;
  unsigned k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

std::uint64_t Stream::below(std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace lorentz
