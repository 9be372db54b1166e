#pragma once

#include <acoustaxel/learn/metrics.hpp>
#include <acoustaxel/learn/model.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace acoustaxel::learn {

enum class FoldMode {
  stratified,  // per-class round robin; every class needs >= folds samples
  interleaved  // sample i goes to fold i mod folds
};

struct CvRow {
  ModelConfig config;
  std::vector<double> fold_scores;  // accuracy or RMSE per fold
  double mean = 0.0;
  bool rejected = false;
  std::string note;
};

struct GridResult {
  ModelConfig best;
  std::size_t best_index = 0;
  Task task = Task::classify;
  std::vector<CvRow> table;
};

/// Validation indices for each fold.
inline std::vector<std::vector<std::size_t>> make_folds(const TrainingSet& train, int folds, FoldMode mode) {
  require(folds >= 2, ErrorKind::validation, "cross-validation needs folds >= 2");
  require(static_cast<std::size_t>(folds) <= train.size(), ErrorKind::validation,
          "folds (" + std::to_string(folds) + ") exceed training-set size (" + std::to_string(train.size()) + ")");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  if (mode == FoldMode::interleaved) {
    for (std::size_t i = 0; i < train.size(); ++i) out[i % out.size()].push_back(i);
    return out;
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.size(); ++i) by_class[train.classes[i]].push_back(i);
  for (const auto& [cls, members] : by_class) {
    require(members.size() >= static_cast<std::size_t>(folds), ErrorKind::validation,
            "folds (" + std::to_string(folds) + ") exceed the sample count of class " + std::to_string(cls) + " (" +
                std::to_string(members.size()) + ")");
    for (std::size_t p = 0; p < members.size(); ++p) out[p % out.size()].push_back(members[p]);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

inline std::vector<std::size_t> complement(const std::vector<std::size_t>& held, std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(n - held.size());
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (h < held.size() && held[h] == i) {
      ++h;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

namespace detail {

inline double fold_score(Task task, std::span<const int> pred_cls, std::span<const double> pred_val,
                         const TrainingSet& val) {
  if (task == Task::regress) return rmse(pred_val, val.targets);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < val.size(); ++i) hit += pred_cls[i] == val.classes[i];
  return static_cast<double>(hit) / static_cast<double>(val.size());
}

struct Fold {
  TrainingSet train;  // standardized with the fold's own statistics
  TrainingSet val;
};

inline Fold standardized_fold(const TrainingSet& all, const std::vector<std::size_t>& val_idx) {
  Fold f;
  f.train = all.subset(complement(val_idx, all.size()));
  f.val = all.subset(val_idx);
  audit_training_rows(f.train.x);
  const auto norm = Standardizer::fit(f.train.x);
  f.train.x = norm.transform(f.train.x);
  f.val.x = norm.transform(f.val.x);
  return f;
}

inline void knn_fold(const Fold& f, Task task, std::span<const std::size_t> rows, std::vector<CvRow>& table) {
  int k_max = 1;
  for (std::size_t r : rows) k_max = std::max(k_max, std::get<KnnConfig>(table[r].config).k);
  std::vector<std::vector<Neighbor>> nbrs(f.val.size());
  for (std::size_t i = 0; i < f.val.size(); ++i)
    nbrs[i] = nearest(f.train.x, f.val.x.row(i), static_cast<std::size_t>(k_max));
  for (std::size_t r : rows) {
    const auto& cfg = std::get<KnnConfig>(table[r].config);
    std::vector<int> cls(f.val.size());
    std::vector<double> val(f.val.size());
    for (std::size_t i = 0; i < f.val.size(); ++i) {
      const std::span<const Neighbor> top(nbrs[i].data(), static_cast<std::size_t>(cfg.k));
      if (task == Task::regress)
        val[i] = average(top, f.train.targets, cfg.weighting);
      else
        cls[i] = vote(top, f.train.classes, cfg.weighting);
    }
    table[r].fold_scores.push_back(fold_score(task, cls, val, f.val));
  }
}

inline void svm_fold(const Fold& f, std::span<const std::size_t> rows, std::vector<CvRow>& table) {
  std::optional<Matrix> sq_train, sq_cross, lin_train, lin_cross;
  for (std::size_t r : rows) {
    const auto& cfg = std::get<SvmConfig>(table[r].config);
    const bool rbf = cfg.kernel == KernelKind::rbf;
    auto& base_train = rbf ? sq_train : lin_train;
    auto& base_cross = rbf ? sq_cross : lin_cross;
    if (!base_train) {
      base_train = rbf ? squared_distances(f.train.x, f.train.x) : gram(f.train.x, f.train.x);
      base_cross = rbf ? squared_distances(f.val.x, f.train.x) : gram(f.val.x, f.train.x);
    }
    Matrix k = kernel_from(*base_train, cfg);
    if (rbf)
      for (std::size_t i = 0; i < k.rows; ++i) k(i, i) = 1.0;
    std::vector<std::size_t> pool;
    const auto model =
        SvmModel::fit_with_kernel(f.train.x, f.train.classes, KernelView{k.data, k.rows}, cfg, {}, nullptr, &pool);
    const Matrix cross = kernel_from(*base_cross, cfg);
    std::vector<int> cls(f.val.size());
    std::vector<double> kv(pool.size());
    for (std::size_t i = 0; i < f.val.size(); ++i) {
      for (std::size_t p = 0; p < pool.size(); ++p) kv[p] = cross(i, pool[p]);
      cls[i] = model.class_ids()[argmax(model.decisions_from_kernel(kv))];
    }
    table[r].fold_scores.push_back(fold_score(Task::classify, cls, {}, f.val));
  }
}

}  // namespace detail

/// k-fold cross-validation over the training rows only. Configurations that
/// cannot be fitted on the smallest fold (k larger than it) are rejected.
inline GridResult grid_search(const TrainingSet& train, const std::vector<ModelConfig>& grid, int folds = 5,
                              FoldMode mode = FoldMode::stratified) {
  require(!grid.empty(), ErrorKind::validation, "grid is empty");
  require(train.size() > 0, ErrorKind::validation, "training split is empty");
  const Task task = train.task();
  const auto fold_idx = make_folds(train, folds, mode);
  std::size_t min_fold_train = train.size();
  for (const auto& f : fold_idx) min_fold_train = std::min(min_fold_train, train.size() - f.size());

  GridResult result;
  result.task = task;
  std::vector<std::size_t> knn_rows, svm_rows, other_rows;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    CvRow row{grid[r], {}, 0.0, false, {}};
    if (const auto* k = std::get_if<KnnConfig>(&grid[r])) {
      if (k->k < 1 || k->k % 2 == 0 || static_cast<std::size_t>(k->k) > min_fold_train) {
        row.rejected = true;
        row.note = "k=" + std::to_string(k->k) + " invalid for fold training size " + std::to_string(min_fold_train);
      } else {
        knn_rows.push_back(r);
      }
    } else if (const auto* s = std::get_if<SvmConfig>(&grid[r])) {
      require(task == Task::classify, ErrorKind::validation, "SVM supports classification schemas only");
      s->validate();
      svm_rows.push_back(r);
    } else {
      std::get<MlpConfig>(grid[r]).validate();
      other_rows.push_back(r);
    }
    result.table.push_back(std::move(row));
  }
  require(knn_rows.size() + svm_rows.size() + other_rows.size() > 0, ErrorKind::validation,
          "every grid configuration was rejected");

  for (const auto& val_idx : fold_idx) {
    if (!knn_rows.empty() || !svm_rows.empty()) {
      const auto f = detail::standardized_fold(train, val_idx);
      if (!knn_rows.empty()) detail::knn_fold(f, task, knn_rows, result.table);
      if (!svm_rows.empty()) detail::svm_fold(f, svm_rows, result.table);
    }
    if (!other_rows.empty()) {
      const auto fit_set = train.subset(complement(val_idx, train.size()));
      const auto val = train.subset(val_idx);
      for (std::size_t r : other_rows) {
        const auto model = SensorModel::train(fit_set, result.table[r].config);
        std::vector<int> cls(val.size());
        std::vector<double> v(val.size());
        for (std::size_t i = 0; i < val.size(); ++i) {
          const auto p = model.predict(val.x.row(i));
          cls[i] = p.class_index;
          v[i] = p.value_mm;
        }
        result.table[r].fold_scores.push_back(detail::fold_score(task, cls, v, val));
      }
    }
  }

  bool have_best = false;
  for (std::size_t r = 0; r < result.table.size(); ++r) {
    auto& row = result.table[r];
    if (row.rejected) continue;
    double sum = 0.0;
    for (double s : row.fold_scores) sum += s;
    row.mean = sum / static_cast<double>(row.fold_scores.size());
    const bool better = !have_best || (task == Task::classify ? row.mean > result.table[result.best_index].mean
                                                              : row.mean < result.table[result.best_index].mean);
    if (better) {
      result.best_index = r;
      have_best = true;
    }
  }
  result.best = result.table[result.best_index].config;
  return result;
}

}  // namespace acoustaxel::learn
