#pragma once

#include <acoustaxel/braille.hpp>
#include <acoustaxel/error.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace acoustaxel::learn {

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  require(!pred.empty(), ErrorKind::validation, "rmse of an empty set");
  require(pred.size() == truth.size(), ErrorKind::validation, "rmse inputs differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> class_names)
      : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }

  void add(int truth, int predicted, std::int64_t count = 1) {
    require(truth >= 0 && static_cast<std::size_t>(truth) < size() && predicted >= 0 &&
                static_cast<std::size_t>(predicted) < size(),
            ErrorKind::bounds, "class index outside the confusion matrix");
    require(count >= 0, ErrorKind::validation, "negative confusion count");
    counts_[static_cast<std::size_t>(truth) * size() + static_cast<std::size_t>(predicted)] += count;
  }

  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * size() + predicted]; }

  std::int64_t row_sum(std::size_t truth) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < size(); ++j) s += at(truth, j);
    return s;
  }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  std::int64_t trace() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += at(i, i);
    return s;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::int64_t> counts_;
};

inline double classification_rate(const ConfusionMatrix& cm) {
  require(cm.size() > 0 && cm.total() > 0, ErrorKind::validation, "classification rate of an empty matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

struct AxisRates {
  double x_rate = 0.0;
  double y_rate = 0.0;
  double joint_rate = 0.0;  // both coordinates exact
};

inline AxisRates per_axis_rate(std::span<const braille::TaxelCoord> preds, std::span<const braille::TaxelCoord> truths) {
  require(!preds.empty(), ErrorKind::validation, "per-axis rate of an empty set");
  require(preds.size() == truths.size(), ErrorKind::validation, "prediction and truth counts differ");
  std::size_t x = 0, y = 0, both = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool cx = preds[i].col == truths[i].col, cy = preds[i].row == truths[i].row;
    x += cx;
    y += cy;
    both += cx && cy;
  }
  const auto n = static_cast<double>(preds.size());
  return {x / n, y / n, both / n};
}

enum class DistanceMetric { euclidean, manhattan };

struct TaxelErrorMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> mean_distance;  // row-major, meaningful only where count > 0
  std::vector<std::size_t> count;

  bool blank(int row, int col) const { return count[static_cast<std::size_t>(row * cols + col)] == 0; }
  double at(int row, int col) const { return mean_distance[static_cast<std::size_t>(row * cols + col)]; }
};

inline double taxel_distance(braille::TaxelCoord a, braille::TaxelCoord b, DistanceMetric metric) {
  const double dx = a.col - b.col, dy = a.row - b.row;
  return metric == DistanceMetric::euclidean ? std::sqrt(dx * dx + dy * dy) : std::abs(dx) + std::abs(dy);
}

/// Mean prediction error per true taxel, in taxel units.
inline TaxelErrorMap taxel_error_map(std::span<const braille::TaxelCoord> preds,
                                     std::span<const braille::TaxelCoord> truths, int rows = 4, int cols = 29,
                                     DistanceMetric metric = DistanceMetric::euclidean) {
  require(preds.size() == truths.size(), ErrorKind::validation, "prediction and truth counts differ");
  TaxelErrorMap map;
  map.rows = rows;
  map.cols = cols;
  map.mean_distance.assign(static_cast<std::size_t>(rows * cols), 0.0);
  map.count.assign(static_cast<std::size_t>(rows * cols), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& t = truths[i];
    require(t.col >= 0 && t.col < cols && t.row >= 0 && t.row < rows, ErrorKind::bounds, "true taxel outside grid");
    const auto cell = static_cast<std::size_t>(t.row * cols + t.col);
    map.mean_distance[cell] += taxel_distance(preds[i], t, metric);
    ++map.count[cell];
  }
  for (std::size_t c = 0; c < map.count.size(); ++c)
    if (map.count[c] > 0) map.mean_distance[c] /= static_cast<double>(map.count[c]);
  return map;
}

/// Sample-weighted mean of a taxel error map.
inline double mean_error_distance(const TaxelErrorMap& map) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < map.count.size(); ++c) {
    sum += map.mean_distance[c] * static_cast<double>(map.count[c]);
    n += map.count[c];
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace acoustaxel::learn
