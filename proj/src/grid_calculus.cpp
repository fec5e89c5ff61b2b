#include "tvseg/grid_calculus.hpp"

#include <cmath>

namespace tvseg::grid {

DualField grad(const Field3& u) {
  const Shape s = u.shape();
  DualField p(s);
  for (std::size_t c = 0; c < s.channels; ++c) {
    const std::size_t base = c * s.plane();
    for (std::size_t i = 0; i < s.height; ++i) {
      for (std::size_t j = 0; j < s.width; ++j) {
        const std::size_t k = base + i * s.width + j;
        const double here = u[k];
        p.row(k) = (i + 1 < s.height) ? u[k + s.width] - here : 0.0;
        p.col(k) = (j + 1 < s.width) ? u[k + 1] - here : 0.0;
      }
    }
  }
  return p;
}

Field3 div(const DualField& p) {
  const Shape s = p.shape();
  Field3 d(s);
  for (std::size_t c = 0; c < s.channels; ++c) {
    const std::size_t base = c * s.plane();
    for (std::size_t i = 0; i < s.height; ++i) {
      for (std::size_t j = 0; j < s.width; ++j) {
        const std::size_t k = base + i * s.width + j;
        double v = 0.0;
        if (i + 1 < s.height) v += p.row(k);
        if (i > 0) v -= p.row(k - s.width);
        if (j + 1 < s.width) v += p.col(k);
        if (j > 0) v -= p.col(k - 1);
        d[k] = v;
      }
    }
  }
  return d;
}

DualField project_unit_disc(const DualField& p) {
  DualField out = p;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double n = std::hypot(out.row(k), out.col(k));
    if (n > 1.0) {
      out.row(k) /= n;
      out.col(k) /= n;
    }
  }
  return out;
}

double tv_value(const Field3& u) {
  const DualField g = grad(u);
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) total += std::hypot(g.row(k), g.col(k));
  return total;
}

}  // namespace tvseg::grid
