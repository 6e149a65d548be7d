#include "esctlr/rng.hpp"

#include <cmath>
#include <numbers>

namespace esctlr::rng {

double gaussian(Splitmix64& stream) {
  double u1 = uniform01(stream.next());
  double u2 = uniform01(stream.next());
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace esctlr::rng
