#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvseg/field.hpp"

namespace tvseg {

/// Aggregated confusion matrix; rows are truth, columns prediction.
class Confusion {
 public:
  explicit Confusion(std::size_t classes);

  void add(const LabelMap& pred, const LabelMap& truth);
  Confusion& operator+=(const Confusion& other);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
  std::uint64_t total() const;

  /// 100 * correct / total.
  double accuracy() const;
  /// 100 * mean IoU over classes present in truth or prediction.
  double miou() const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

double global_accuracy(const LabelMap& pred, const LabelMap& truth);

double miou(const LabelMap& pred, const LabelMap& truth, std::size_t classes);

enum class ReMode { label_index, one_hot };

/// 100/(N1*N2) * sum over pixels of |grad u|. label_index treats the class
/// index itself as the field; one_hot sums the value over per-class
/// indicator maps.
double regularization_effect(const LabelMap& u, ReMode mode = ReMode::label_index,
                             std::size_t classes = 0);

/// RE of a single-channel field.
double regularization_effect(const Field3& u);

struct MetricsRow {
  std::string model;
  std::string noise_kind;
  double level = 0.0;
  double miou = 0.0;
  double accuracy = 0.0;
  double re = 0.0;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRow& row);

}  // namespace tvseg
