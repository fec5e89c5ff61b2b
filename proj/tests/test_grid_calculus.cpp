#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tvseg/grid_calculus.hpp"

using namespace tvseg;
using tvseg::testing::random_dual;
using tvseg::testing::random_field;

TEST_CASE("grad of a constant field is zero") {
  const Field3 u({2, 3, 4}, 1.7);
  const DualField g = grid::grad(u);
  CHECK(g.max_norm() == 0.0);
}

TEST_CASE("grad on small hand examples") {
  const Field3 col({1, 2, 1}, {0.0, 2.0});
  const DualField g = grid::grad(col);
  CHECK(g.row(0) == 2.0);
  CHECK(g.row(1) == 0.0);
  CHECK(g.col(0) == 0.0);
  CHECK(g.col(1) == 0.0);

  const Field3 sq({1, 2, 2}, {0, 1, 0, 1});
  const DualField h = grid::grad(sq);
  for (std::size_t k = 0; k < 4; ++k) CHECK(h.row(k) == 0.0);
  CHECK(h.col(0) == 1.0);
  CHECK(h.col(1) == 0.0);
  CHECK(h.col(2) == 1.0);
  CHECK(h.col(3) == 0.0);
}

TEST_CASE("div on hand examples") {
  CHECK(max_abs(grid::div(DualField({2, 3, 3}))) == 0.0);

  DualField p({1, 2, 1});
  p.row(0) = 1.0;
  const Field3 d = grid::div(p);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == -1.0);
  const Field3 u({1, 2, 1}, {0.0, 2.0});
  CHECK(dot(grid::grad(u), p) == doctest::Approx(2.0));
  CHECK(dot(u, d) == doctest::Approx(-2.0));
}

TEST_CASE("div is the negative adjoint of grad") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 120; ++trial) {
    const Shape s = trial < 20 ? Shape{1, 5, 7} : tvseg::testing::random_shape(rng, 4, 9);
    const Field3 u = random_field(s, rng);
    const DualField p = random_dual(s, rng);
    const double a = dot(grid::grad(u), p);
    const double b = dot(u, grid::div(p));
    const double scale = std::abs(a) + std::abs(b) + 1.0;
    CHECK(std::abs(a + b) / scale <= 1e-12);
  }
}

TEST_CASE("grad and div are linear") {
  std::mt19937_64 rng(3);
  const Shape s{2, 4, 5};
  const Field3 u = random_field(s, rng), v = random_field(s, rng);
  const DualField gu = grid::grad(u), gv = grid::grad(v), g = grid::grad(2.0 * u + v);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(g.row(k) == doctest::Approx(2 * gu.row(k) + gv.row(k)).epsilon(1e-12));
    CHECK(g.col(k) == doctest::Approx(2 * gu.col(k) + gv.col(k)).epsilon(1e-12));
  }
  DualField p = random_dual(s, rng), q = random_dual(s, rng);
  const Field3 dp = grid::div(p), dq = grid::div(q);
  p *= 3.0;
  p += q;
  CHECK(max_abs_diff(grid::div(p), 3.0 * dp + dq) <= 1e-12);
}

TEST_CASE("unit disc projection") {
  DualField p({1, 1, 3});
  p.row(0) = 0.3;
  p.col(0) = -0.4;
  p.row(1) = 3.0;
  p.col(1) = 4.0;
  p.row(2) = 0.6;
  p.col(2) = 0.8;
  const DualField q = grid::project_unit_disc(p);
  CHECK(q.row(0) == 0.3);
  CHECK(q.col(0) == -0.4);
  CHECK(q.row(1) == doctest::Approx(0.6));
  CHECK(q.col(1) == doctest::Approx(0.8));
  CHECK(q.row(2) == 0.6);
  CHECK(q.col(2) == 0.8);
}

TEST_CASE("projection is idempotent and non-expansive") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s = tvseg::testing::random_shape(rng, 3, 6);
    const DualField x = random_dual(s, rng, 2.0), y = random_dual(s, rng, 2.0);
    const DualField px = grid::project_unit_disc(x), py = grid::project_unit_disc(y);
    CHECK(px.max_norm() <= 1.0 + 1e-15);
    const DualField ppx = grid::project_unit_disc(px);
    for (std::size_t k = 0; k < px.size(); ++k) {
      CHECK(std::abs(ppx.row(k) - px.row(k)) <= 1e-15);
      CHECK(std::abs(ppx.col(k) - px.col(k)) <= 1e-15);
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double before = std::hypot(x.row(k) - y.row(k), x.col(k) - y.col(k));
      const double after = std::hypot(px.row(k) - py.row(k), px.col(k) - py.col(k));
      CHECK(after <= before + 1e-14);
    }
  }
}

TEST_CASE("tv_value examples") {
  CHECK(grid::tv_value(Field3({3, 4, 4}, 0.25)) == 0.0);
  CHECK(grid::tv_value(Field3({1, 2, 2}, {0, 1, 0, 1})) == doctest::Approx(2.0));
}

TEST_CASE("tv_value is positively homogeneous and shift invariant") {
  std::mt19937_64 rng(8);
  const Field3 u = random_field({2, 5, 6}, rng);
  CHECK(grid::tv_value(3.0 * u) == doctest::Approx(3 * grid::tv_value(u)).epsilon(1e-12));
  CHECK(grid::tv_value(u + Field3(u.shape(), 4.0)) == doctest::Approx(grid::tv_value(u)).epsilon(1e-12));
}

TEST_CASE("tv_value agrees with the dual form") {
  // sup over |p| <= 1 of <u, div p>, by projected ascent from random duals.
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Field3 u = random_field({1, 4, 4}, rng);
    DualField p = grid::project_unit_disc(random_dual(u.shape(), rng));
    for (int it = 0; it < 300; ++it) {
      DualField ascent = grid::grad(u);
      ascent *= -0.25;
      p += ascent;
      p = grid::project_unit_disc(p);
    }
    const double dual = dot(u, grid::div(p));
    CHECK(dual == doctest::Approx(grid::tv_value(u)).epsilon(0.02));
    CHECK(dual <= grid::tv_value(u) + 1e-12);
  }
}
