#include "tvseg/field.hpp"

#include <algorithm>
#include <cmath>

namespace tvseg {

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + to_string(a) +
                                " vs " + to_string(b));
  }
}

namespace {

void check_shape(const Shape& s) {
  if (s.channels == 0 || s.height == 0 || s.width == 0) {
    throw std::invalid_argument("field shape must be positive, got " + to_string(s));
  }
}

}  // namespace

Field3::Field3(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {
  check_shape(shape);
}

Field3::Field3(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  check_shape(shape);
  if (values_.size() != shape.size()) {
    throw std::invalid_argument("Field3: value count " + std::to_string(values_.size()) +
                                " does not match shape " + to_string(shape));
  }
}

bool Field3::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field3& Field3::operator+=(const Field3& other) {
  require_same_shape(shape_, other.shape_, "Field3::operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field3& Field3::operator-=(const Field3& other) {
  require_same_shape(shape_, other.shape_, "Field3::operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field3& Field3::operator*=(double alpha) {
  for (double& v : values_) v *= alpha;
  return *this;
}

Field3 operator+(Field3 a, const Field3& b) { return a += b; }
Field3 operator-(Field3 a, const Field3& b) { return a -= b; }
Field3 operator*(double alpha, Field3 a) { return a *= alpha; }

double dot(const Field3& a, const Field3& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double max_abs(const Field3& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Field3& a, const Field3& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

DualField::DualField(Shape shape)
    : shape_(shape), rows_(shape.size(), 0.0), cols_(shape.size(), 0.0) {
  check_shape(shape);
}

double DualField::max_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < rows_.size(); ++k) m = std::max(m, std::hypot(rows_[k], cols_[k]));
  return m;
}

bool DualField::all_finite() const {
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (!std::isfinite(rows_[k]) || !std::isfinite(cols_[k])) return false;
  }
  return true;
}

DualField& DualField::operator+=(const DualField& other) {
  require_same_shape(shape_, other.shape_, "DualField::operator+=");
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    rows_[k] += other.rows_[k];
    cols_[k] += other.cols_[k];
  }
  return *this;
}

DualField& DualField::operator*=(double alpha) {
  for (double& v : rows_) v *= alpha;
  for (double& v : cols_) v *= alpha;
  return *this;
}

double dot(const DualField& a, const DualField& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.row(k) * b.row(k) + a.col(k) * b.col(k);
  return s;
}

LabelMap::LabelMap(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), labels_(height * width, fill) {
  if (height == 0 || width == 0) throw std::invalid_argument("LabelMap: empty shape");
}

std::size_t LabelMap::max_label_bound() const {
  std::uint8_t m = 0;
  for (auto v : labels_) m = std::max(m, v);
  return labels_.empty() ? 0 : std::size_t{m} + 1;
}

LabelMap argmax(const Field3& scores) {
  LabelMap out(scores.height(), scores.width());
  const std::size_t plane = scores.shape().plane();
  for (std::size_t p = 0; p < plane; ++p) {
    std::size_t best = 0;
    double best_v = scores[p];
    for (std::size_t c = 1; c < scores.channels(); ++c) {
      const double v = scores[c * plane + p];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace tvseg
