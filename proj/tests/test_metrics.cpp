#include <algorithm>
#include <random>

#include "doctest.h"
#include "tvseg/metrics.hpp"

using namespace tvseg;

namespace {

LabelMap make(std::size_t h, std::size_t w, std::initializer_list<int> v) {
  LabelMap m(h, w);
  std::size_t k = 0;
  for (int x : v) m[k++] = static_cast<std::uint8_t>(x);
  return m;
}

}  // namespace

TEST_CASE("global accuracy") {
  const LabelMap t = make(2, 2, {0, 1, 1, 0});
  CHECK(global_accuracy(t, t) == 100.0);
  CHECK(global_accuracy(make(2, 2, {1, 0, 0, 1}), t) == 0.0);
  CHECK(global_accuracy(make(2, 2, {0, 1, 1, 1}), t) == 75.0);
  CHECK_THROWS_AS(global_accuracy(LabelMap(1, 2), t), std::invalid_argument);
}

TEST_CASE("mean IoU") {
  const LabelMap t = make(1, 4, {0, 0, 1, 1});
  CHECK(miou(t, t, 2) == 100.0);
  CHECK(miou(make(1, 4, {1, 1, 0, 0}), t, 2) == 0.0);
  CHECK(miou(make(1, 4, {0, 1, 1, 1}), t, 2) == doctest::Approx(100.0 * (0.5 + 2.0 / 3.0) / 2.0));
  CHECK(miou(make(1, 4, {0, 1, 1, 1}), t, 2) == doctest::Approx(58.33).epsilon(1e-4));
}

TEST_CASE("confusion aggregation") {
  Confusion c(3);
  c.add(make(1, 4, {0, 1, 1, 1}), make(1, 4, {0, 0, 1, 1}));
  c.add(make(1, 2, {2, 2}), make(1, 2, {2, 1}));
  CHECK(c.total() == 6);
  CHECK(c.at(0, 1) == 1);
  CHECK(c.at(1, 2) == 1);
  CHECK(c.accuracy() == doctest::Approx(400.0 / 6.0));
  Confusion d(3);
  d += c;
  CHECK(d.miou() == c.miou());
  CHECK_THROWS_AS(c.add(make(1, 1, {3}), make(1, 1, {0})), std::invalid_argument);
}

TEST_CASE("metrics are invariant to a common pixel permutation") {
  std::mt19937_64 rng(1);
  LabelMap p(6, 6), t(6, 6);
  for (std::size_t k = 0; k < 36; ++k) {
    p[k] = static_cast<std::uint8_t>(rng() % 3);
    t[k] = static_cast<std::uint8_t>(rng() % 3);
  }
  std::vector<std::size_t> perm(36);
  for (std::size_t k = 0; k < 36; ++k) perm[k] = k;
  std::shuffle(perm.begin(), perm.end(), rng);
  LabelMap pp(6, 6), tp(6, 6);
  for (std::size_t k = 0; k < 36; ++k) {
    pp[k] = p[perm[k]];
    tp[k] = t[perm[k]];
  }
  CHECK(miou(pp, tp, 3) == doctest::Approx(miou(p, t, 3)));
  CHECK(global_accuracy(pp, tp) == global_accuracy(p, t));
}

TEST_CASE("mIoU is invariant to relabeling classes consistently") {
  const LabelMap t = make(2, 3, {0, 1, 2, 2, 1, 0});
  const LabelMap p = make(2, 3, {0, 2, 2, 1, 1, 0});
  const auto swap12 = [](LabelMap m) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = m[k] == 1 ? 2 : (m[k] == 2 ? 1 : m[k]);
    return m;
  };
  CHECK(miou(swap12(p), swap12(t), 3) == doctest::Approx(miou(p, t, 3)));
}

TEST_CASE("regularization effect") {
  CHECK(regularization_effect(LabelMap(3, 3, 2)) == 0.0);
  CHECK(regularization_effect(LabelMap(3, 3, 2), ReMode::one_hot, 3) == 0.0);
  const LabelMap m = make(2, 2, {0, 1, 0, 1});
  CHECK(regularization_effect(m) == doctest::Approx(50.0));
  CHECK(regularization_effect(m, ReMode::one_hot, 2) == doctest::Approx(100.0));
  CHECK(regularization_effect(Field3({1, 2, 2}, {0, 1, 0, 1})) == doctest::Approx(50.0));
}

TEST_CASE("metrics CSV") {
  CHECK(metrics_csv_header() == "model,noise_kind,level,miou,accuracy,re");
  MetricsRow r{"plain", "gauss", 0.05, 91.25, 97.5, 3.125};
  CHECK(to_csv_row(r) == "plain,gauss,0.05,91.2500,97.5000,3.1250");
}
