#include "tvseg/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "tvseg/grid_calculus.hpp"

namespace tvseg {

namespace {

void require_same_size(const LabelMap& a, const LabelMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("label maps differ in shape");
  }
}

}  // namespace

Confusion::Confusion(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw std::invalid_argument("Confusion: need at least one class");
}

void Confusion::add(const LabelMap& pred, const LabelMap& truth) {
  require_same_size(pred, truth);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (pred[p] >= classes_ || truth[p] >= classes_) {
      throw std::invalid_argument("Confusion: label out of range");
    }
    ++counts_[truth[p] * classes_ + pred[p]];
  }
}

Confusion& Confusion::operator+=(const Confusion& other) {
  if (other.classes_ != classes_) throw std::invalid_argument("Confusion: class count mismatch");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  return *this;
}

std::uint64_t Confusion::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double Confusion::accuracy() const {
  const std::uint64_t n = total();
  if (n == 0) return 0.0;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < classes_; ++c) correct += at(c, c);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

double Confusion::miou() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes_; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < classes_; ++k) {
      row += at(c, k);
      col += at(k, c);
    }
    const std::uint64_t tp = at(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    sum += static_cast<double>(tp) / static_cast<double>(uni);
    ++present;
  }
  return present == 0 ? 0.0 : 100.0 * sum / static_cast<double>(present);
}

double global_accuracy(const LabelMap& pred, const LabelMap& truth) {
  require_same_size(pred, truth);
  std::size_t correct = 0;
  for (std::size_t p = 0; p < pred.size(); ++p) correct += pred[p] == truth[p];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(pred.size());
}

double miou(const LabelMap& pred, const LabelMap& truth, std::size_t classes) {
  Confusion cm(classes);
  cm.add(pred, truth);
  return cm.miou();
}

double regularization_effect(const Field3& u) {
  return 100.0 * grid::tv_value(u) / static_cast<double>(u.shape().plane());
}

double regularization_effect(const LabelMap& u, ReMode mode, std::size_t classes) {
  if (mode == ReMode::label_index) {
    Field3 f(Shape{1, u.height(), u.width()});
    for (std::size_t p = 0; p < u.size(); ++p) f[p] = u[p];
    return regularization_effect(f);
  }
  const std::size_t c_count = classes == 0 ? u.max_label_bound() : classes;
  Field3 f(Shape{c_count, u.height(), u.width()});
  const std::size_t plane = u.size();
  for (std::size_t p = 0; p < plane; ++p) {
    if (u[p] >= c_count) throw std::invalid_argument("regularization_effect: label out of range");
    f[u[p] * plane + p] = 1.0;
  }
  return 100.0 * grid::tv_value(f) / static_cast<double>(plane);
}

std::string metrics_csv_header() { return "model,noise_kind,level,miou,accuracy,re"; }

std::string to_csv_row(const MetricsRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.4f,%.4f,%.4f", row.model.c_str(),
                row.noise_kind.c_str(), row.level, row.miou, row.accuracy, row.re);
  return buf;
}

}  // namespace tvseg
