#pragma once

#include <random>

#include "tvseg/field.hpp"

namespace tvseg::testing {

inline Field3 random_field(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Field3 f(s);
  for (auto& v : f.values()) v = n(rng);
  return f;
}

inline DualField random_dual(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  DualField p(s);
  for (auto& v : p.rows()) v = n(rng);
  for (auto& v : p.cols()) v = n(rng);
  return p;
}

inline Shape random_shape(std::mt19937_64& rng, std::size_t max_channels, std::size_t max_side) {
  std::uniform_int_distribution<std::size_t> c(1, max_channels), s(1, max_side);
  return {c(rng), s(rng), s(rng)};
}

}  // namespace tvseg::testing
