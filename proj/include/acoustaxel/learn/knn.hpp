#pragma once

#include <acoustaxel/learn/common.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace acoustaxel::learn {

enum class KnnWeighting { uniform, inverse_distance };

struct KnnConfig {
  int k = 5;
  KnnWeighting weighting = KnnWeighting::uniform;
  Task task = Task::classify;

  friend bool operator==(const KnnConfig&, const KnnConfig&) = default;

  void validate(std::size_t train_size) const {
    require(k >= 1 && k % 2 == 1, ErrorKind::validation, "k must be a positive odd integer, got " + std::to_string(k));
    require(static_cast<std::size_t>(k) <= train_size, ErrorKind::validation,
            "k = " + std::to_string(k) + " exceeds the training-set size " + std::to_string(train_size));
  }
};

struct Neighbor {
  double squared_distance;
  std::size_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  }
};

/// The `count` nearest rows of `points` to `query`, nearest first, ties by index.
inline std::vector<Neighbor> nearest(const Matrix& points, std::span<const double> query, std::size_t count) {
  std::vector<Neighbor> all(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i) all[i] = {squared_distance(points.row(i), query), i};
  count = std::min(count, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end());
  all.resize(count);
  return all;
}

/// Vote / average over the first k entries of a sorted neighbour list.
/// Inverse-distance weighting gives exact matches all the weight when any exist.
inline std::vector<double> neighbor_weights(std::span<const Neighbor> neighbors, KnnWeighting weighting) {
  std::vector<double> w(neighbors.size(), 1.0);
  if (weighting == KnnWeighting::uniform) return w;
  const bool exact = !neighbors.empty() && neighbors.front().squared_distance == 0.0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const double d = std::sqrt(neighbors[i].squared_distance);
    w[i] = exact ? (d == 0.0 ? 1.0 : 0.0) : 1.0 / d;
  }
  return w;
}

inline int vote(std::span<const Neighbor> neighbors, std::span<const int> classes, KnnWeighting weighting) {
  const auto w = neighbor_weights(neighbors, weighting);
  std::map<int, double> tally;
  for (std::size_t i = 0; i < neighbors.size(); ++i) tally[classes[neighbors[i].index]] += w[i];
  int best = tally.begin()->first;
  double best_weight = tally.begin()->second;
  for (const auto& [cls, weight] : tally)
    if (weight > best_weight) {
      best = cls;
      best_weight = weight;
    }
  return best;
}

inline double average(std::span<const Neighbor> neighbors, std::span<const double> targets, KnnWeighting weighting) {
  const auto w = neighbor_weights(neighbors, weighting);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    num += w[i] * targets[neighbors[i].index];
    den += w[i];
  }
  return num / den;
}

/// Stores standardized training rows; prediction is a brute-force scan.
class KnnModel {
 public:
  KnnModel() = default;

  static KnnModel fit(const TrainingSet& train, const KnnConfig& cfg) {
    cfg.validate(train.size());
    audit_training_rows(train.x);
    KnnModel m;
    m.config_ = cfg;
    m.norm_ = Standardizer::fit(train.x);
    m.points_ = m.norm_.transform(train.x);
    m.classes_ = train.classes;
    m.targets_ = train.targets;
    return m;
  }

  const KnnConfig& config() const { return config_; }
  const Standardizer& normalization() const { return norm_; }
  const Matrix& points() const { return points_; }
  const std::vector<int>& classes() const { return classes_; }
  const std::vector<double>& targets() const { return targets_; }
  std::size_t feature_length() const { return points_.cols; }

  std::vector<Neighbor> neighbors(std::span<const double> raw) const {
    return nearest(points_, norm_.transform(raw), static_cast<std::size_t>(config_.k));
  }

  int predict_class(std::span<const double> raw) const {
    return vote(neighbors(raw), classes_, config_.weighting);
  }

  double predict_value(std::span<const double> raw) const {
    return average(neighbors(raw), targets_, config_.weighting);
  }

  static KnnModel from_parts(KnnConfig cfg, Standardizer norm, Matrix points, std::vector<int> classes,
                             std::vector<double> targets) {
    KnnModel m;
    m.config_ = cfg;
    m.norm_ = std::move(norm);
    m.points_ = std::move(points);
    m.classes_ = std::move(classes);
    m.targets_ = std::move(targets);
    return m;
  }

 private:
  KnnConfig config_;
  Standardizer norm_;
  Matrix points_;
  std::vector<int> classes_;
  std::vector<double> targets_;
};

}  // namespace acoustaxel::learn
