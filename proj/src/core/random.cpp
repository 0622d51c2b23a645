#include "layerbokeh/core/random.hpp"

#include <cmath>
#include <numbers>

namespace layerbokeh {

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  SplitMix64 g(a ^ 0x6a09e667f3bcc909ULL);
  std::uint64_t h = g.next();
  SplitMix64 g2(h ^ (b * 0xd1342543de82ef95ULL));
  h = g2.next();
  SplitMix64 g3(h ^ (c * 0x2545f4914f6cdd1dULL));
  return g3.next();
}

}  // namespace layerbokeh
