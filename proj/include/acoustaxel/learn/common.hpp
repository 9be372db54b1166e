#pragma once

#include <acoustaxel/dataset.hpp>
#include <acoustaxel/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace acoustaxel::learn {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return std::span<double>(data).subspan(i * cols, cols); }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(data).subspan(i * cols, cols); }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols);
    for (std::size_t r = 0; r < idx.size(); ++r) std::copy_n(row(idx[r]).begin(), cols, out.row(r).begin());
    return out;
  }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  // Four partial sums break the dependency chain; order is fixed, so results are reproducible.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1], d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

/// Per-feature standardization fitted on training rows. A feature whose
/// spread is zero (relative to its magnitude) keeps scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 1.0);
    if (x.rows == 0) return s;
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x(i, j);
    for (double& m : s.mean) m /= static_cast<double>(x.rows);
    std::vector<double> var(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.cols; ++j) {
        const double d = x(i, j) - s.mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(x.rows));
      s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
    }
    return s;
  }

  std::size_t size() const { return mean.size(); }

  void apply(std::span<double> v) const {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (v[j] - mean[j]) / scale[j];
  }

  Matrix transform(const Matrix& x) const {
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows; ++i) apply(out.row(i));
    return out;
  }

  std::vector<double> transform(std::span<const double> v) const {
    std::vector<double> out(v.begin(), v.end());
    apply(out);
    return out;
  }
};

enum class Task { classify, regress };

/// Feature rows plus labels, detached from the dataset they came from.
struct TrainingSet {
  Matrix x;
  std::vector<int> classes;     // class index (letter / line / taxel code)
  std::vector<double> targets;  // regression targets in mm
  LabelSchema schema = LabelSchema::classification;

  std::size_t size() const { return x.rows; }
  Task task() const { return schema == LabelSchema::regression_mm ? Task::regress : Task::classify; }

  TrainingSet subset(std::span<const std::size_t> idx) const {
    TrainingSet out;
    out.x = x.select_rows(idx);
    out.schema = schema;
    for (std::size_t i : idx) {
      out.classes.push_back(classes[i]);
      out.targets.push_back(targets[i]);
    }
    return out;
  }

  std::vector<int> distinct_classes() const {
    std::vector<int> out(classes);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline TrainingSet to_training_set(const Dataset& ds, Split which) {
  TrainingSet out;
  out.schema = ds.schema;
  const std::size_t n = ds.count(which);
  out.x = Matrix(n, ds.feature_length);
  std::size_t r = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits[i] != which) continue;
    const auto src = ds.row(i);
    auto dst = out.x.row(r++);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
    out.classes.push_back(ds.labels[i].class_index);
    out.targets.push_back(ds.labels[i].scalar_mm);
  }
  return out;
}

/// Content hash of a feature row (FNV-1a over the IEEE bytes).
inline std::uint64_t row_hash(std::span<const double> v) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

/// Records held-out row hashes; every fitting routine reports the rows it
/// consumes so leaks of held-out data into training can be detected.
class IsolationAudit {
 public:
  explicit IsolationAudit(const Matrix& held_out) {
    for (std::size_t i = 0; i < held_out.rows; ++i) forbidden_.insert(row_hash(held_out.row(i)));
  }

  // Held-out rows whose exact content also occurs in the training split (a
  // noiseless simulator repeats recordings) cannot be told apart by content;
  // they are left out of the forbidden set and counted instead.
  IsolationAudit(const Matrix& held_out, const Matrix& training) : IsolationAudit(held_out) {
    for (std::size_t i = 0; i < training.rows; ++i) shared_ += forbidden_.erase(row_hash(training.row(i)));
  }

  void inspect(const Matrix& x) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      ++rows_checked_;
      if (forbidden_.contains(row_hash(x.row(i)))) ++violations_;
    }
  }

  std::size_t rows_checked() const { return rows_checked_; }
  std::size_t violations() const { return violations_; }
  std::size_t shared_rows() const { return shared_; }

 private:
  std::unordered_set<std::uint64_t> forbidden_;
  std::size_t shared_ = 0;
  std::size_t rows_checked_ = 0;
  std::size_t violations_ = 0;
};

namespace detail {
inline IsolationAudit*& active_audit() {
  thread_local IsolationAudit* audit = nullptr;
  return audit;
}
}  // namespace detail

/// Installs an audit for the current thread for the lifetime of the guard.
class ScopedAudit {
 public:
  explicit ScopedAudit(IsolationAudit& audit) : previous_(detail::active_audit()) { detail::active_audit() = &audit; }
  ~ScopedAudit() { detail::active_audit() = previous_; }
  ScopedAudit(const ScopedAudit&) = delete;
  ScopedAudit& operator=(const ScopedAudit&) = delete;

 private:
  IsolationAudit* previous_;
};

inline void audit_training_rows(const Matrix& x) {
  if (auto* audit = detail::active_audit()) audit->inspect(x);
}

/// Index of the largest value; the first one wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace acoustaxel::learn
