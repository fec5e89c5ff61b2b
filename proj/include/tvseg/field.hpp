#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvseg {

/// Shape of a channel-major C x N1 x N2 grid.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Throws std::invalid_argument with `what` when the shapes differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Real scalar field, channel-major then row-major.
class Field3 {
 public:
  Field3() = default;
  explicit Field3(Shape shape, double fill = 0.0);
  Field3(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return values_[(c * shape_.height + i) * shape_.width + j];
  }
  double operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return values_[(c * shape_.height + i) * shape_.width + j];
  }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> channel(std::size_t c) {
    return {values_.data() + c * shape_.plane(), shape_.plane()};
  }
  std::span<const double> channel(std::size_t c) const {
    return {values_.data() + c * shape_.plane(), shape_.plane()};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  bool all_finite() const;

  Field3& operator+=(const Field3& other);
  Field3& operator-=(const Field3& other);
  Field3& operator*=(double alpha);

  friend bool operator==(const Field3&, const Field3&) = default;

 private:
  Shape shape_{};
  std::vector<double> values_;
};

Field3 operator+(Field3 a, const Field3& b);
Field3 operator-(Field3 a, const Field3& b);
Field3 operator*(double alpha, Field3 a);

double dot(const Field3& a, const Field3& b);
double max_abs(const Field3& a);
double max_abs_diff(const Field3& a, const Field3& b);

/// Field of 2-vectors per channel and pixel. Component 1 runs along rows
/// (index i), component 2 along columns (index j).
class DualField {
 public:
  DualField() = default;
  explicit DualField(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return rows_.size(); }

  double& row(std::size_t k) { return rows_[k]; }
  double row(std::size_t k) const { return rows_[k]; }
  double& col(std::size_t k) { return cols_[k]; }
  double col(std::size_t k) const { return cols_[k]; }

  std::span<double> rows() { return rows_; }
  std::span<const double> rows() const { return rows_; }
  std::span<double> cols() { return cols_; }
  std::span<const double> cols() const { return cols_; }

  /// Largest per-pixel Euclidean norm.
  double max_norm() const;
  bool all_finite() const;

  DualField& operator+=(const DualField& other);
  DualField& operator*=(double alpha);

  friend bool operator==(const DualField&, const DualField&) = default;

 private:
  Shape shape_{};
  std::vector<double> rows_;
  std::vector<double> cols_;
};

double dot(const DualField& a, const DualField& b);

/// N1 x N2 map of class indices.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, std::uint8_t fill = 0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  std::uint8_t& operator()(std::size_t i, std::size_t j) { return labels_[i * width_ + j]; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return labels_[i * width_ + j]; }
  std::uint8_t& operator[](std::size_t k) { return labels_[k]; }
  std::uint8_t operator[](std::size_t k) const { return labels_[k]; }

  std::span<const std::uint8_t> labels() const { return labels_; }
  std::span<std::uint8_t> labels() { return labels_; }

  /// One past the largest label present.
  std::size_t max_label_bound() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> labels_;
};

/// Per-pixel argmax over channels; ties go to the lowest class index.
LabelMap argmax(const Field3& scores);

}  // namespace tvseg
