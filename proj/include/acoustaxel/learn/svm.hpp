#pragma once

#include <acoustaxel/learn/common.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace acoustaxel::learn {

enum class KernelKind { linear, rbf };

struct SvmConfig {
  KernelKind kernel = KernelKind::rbf;
  double c = 1.0;
  double gamma = 1e-3;  // rbf only
  double tol = 1e-3;
  int max_passes = 200;  // iteration budget = max_passes * training-set size

  friend bool operator==(const SvmConfig&, const SvmConfig&) = default;

  void validate() const {
    require(c > 0.0 && std::isfinite(c), ErrorKind::validation, "SVM c must be positive");
    require(kernel == KernelKind::linear || (gamma > 0.0 && std::isfinite(gamma)), ErrorKind::validation,
            "SVM gamma must be positive");
    require(tol > 0.0, ErrorKind::validation, "SVM tol must be positive");
    require(max_passes >= 1, ErrorKind::validation, "SVM max_passes must be >= 1");
  }
};

/// Square row-major kernel matrix view.
struct KernelView {
  std::span<const double> values;
  std::size_t n = 0;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  std::span<const double> row(std::size_t i) const { return values.subspan(i * n, n); }
};

/// Row-major Gram matrix a * b^T.
inline Matrix gram(const Matrix& a, const Matrix& b) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> ma(a.data.data(), static_cast<Eigen::Index>(a.rows), static_cast<Eigen::Index>(a.cols));
  Eigen::Map<const RowMajor> mb(b.data.data(), static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
  Matrix out(a.rows, b.rows);
  Eigen::Map<RowMajor> mo(out.data.data(), static_cast<Eigen::Index>(out.rows), static_cast<Eigen::Index>(out.cols));
  mo.noalias() = ma * mb.transpose();
  return out;
}

/// Pairwise squared distances ||a_i - b_j||^2 from a Gram matrix, clamped at zero.
inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
  Matrix g = gram(a, b);
  std::vector<double> na(a.rows), nb(b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) na[i] = dot(a.row(i), a.row(i));
  for (std::size_t j = 0; j < b.rows; ++j) nb[j] = dot(b.row(j), b.row(j));
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) g(i, j) = std::max(0.0, na[i] + nb[j] - 2.0 * g(i, j));
  return g;
}

/// Kernel values from precomputed inner products (linear) or squared distances (rbf).
inline Matrix kernel_from(const Matrix& products_or_distances, const SvmConfig& cfg) {
  Matrix k = products_or_distances;
  if (cfg.kernel == KernelKind::rbf)
    for (double& v : k.data) v = std::exp(-cfg.gamma * v);
  return k;
}

inline double kernel_value(std::span<const double> a, std::span<const double> b, const SvmConfig& cfg) {
  return cfg.kernel == KernelKind::linear ? dot(a, b) : std::exp(-cfg.gamma * squared_distance(a, b));
}

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;       // decision = sum_i alpha_i y_i K(x_i, x) - rho
  double kkt_gap = 0.0;   // max violation m(alpha) - M(alpha) at exit
  long iterations = 0;
  bool converged = false;
};

/// Dual objective 1/2 a^T Q a - sum(a), Q_ij = y_i y_j K_ij (the solver minimizes it).
inline double dual_objective(const KernelView& k, std::span<const std::int8_t> y, std::span<const double> alpha) {
  double quad = 0.0, linear = 0.0;
  for (std::size_t i = 0; i < k.n; ++i) {
    if (alpha[i] == 0.0) continue;
    linear += alpha[i];
    for (std::size_t j = 0; j < k.n; ++j)
      if (alpha[j] != 0.0) quad += alpha[i] * alpha[j] * y[i] * y[j] * k(i, j);
  }
  return 0.5 * quad - linear;
}

/// Sequential minimal optimization for the soft-margin dual
///   min 1/2 a^T Q a - e^T a   s.t. 0 <= a_i <= c, y^T a = 0,
/// using second-order working-set selection. Stops when the maximal KKT
/// violation drops below tol.
inline SmoResult solve_smo(const KernelView& k, std::span<const std::int8_t> y, double c, double tol, long max_iter) {
  const std::size_t n = k.n;
  constexpr double tau = 1e-12;
  SmoResult res;
  res.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = res.alpha;

  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  for (;;) {
    // i: most violating index in I_up.
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      if (in_up && -y[t] * grad[t] > g_max) {
        g_max = -y[t] * grad[t];
        i = t;
      }
    }
    double g_max2 = -std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (!in_low) continue;
      const double yg = y[t] * grad[t];
      g_max2 = std::max(g_max2, yg);
      if (i == n) continue;
      const double diff = g_max + yg;
      if (diff > 0.0) {
        double quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (quad <= 0.0) quad = tau;
        const double obj = -(diff * diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    res.kkt_gap = (i == n || g_max2 == -std::numeric_limits<double>::infinity()) ? 0.0 : g_max + g_max2;
    if (i == n || j == n || res.kkt_gap < tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iter) break;
    ++res.iterations;

    const double old_i = alpha[i], old_j = alpha[j];
    const double qij = y[i] * y[j] * k(i, j);
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    const auto ki = k.row(i), kj = k.row(j);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
  }

  // rho: average y*grad over free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  res.rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);
  return res;
}

/// One binary machine of a one-vs-rest ensemble; coefficients index the model's support pool.
struct BinaryMachine {
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;
};

class SvmModel {
 public:
  SvmModel() = default;

  /// One-vs-rest training on a precomputed kernel over `train` (already standardized).
  static SvmModel fit_with_kernel(const Matrix& standardized, std::span<const int> classes, const KernelView& k,
                                  const SvmConfig& cfg, Standardizer norm = {},
                                  std::vector<SmoResult>* diagnostics = nullptr,
                                  std::vector<std::size_t>* pool_rows = nullptr) {
    cfg.validate();
    std::vector<int> ids(classes.begin(), classes.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    require(ids.size() >= 2, ErrorKind::validation, "SVM training needs at least two classes");

    const std::size_t n = standardized.rows;
    const long max_iter = static_cast<long>(cfg.max_passes) * static_cast<long>(std::max<std::size_t>(n, 1));
    std::vector<std::vector<double>> alphas;
    std::vector<double> rhos;
    std::vector<std::int8_t> y(n);
    for (int cls : ids) {
      for (std::size_t i = 0; i < n; ++i) y[i] = classes[i] == cls ? 1 : -1;
      auto res = solve_smo(k, y, cfg.c, cfg.tol, max_iter);
      rhos.push_back(res.rho);
      for (std::size_t i = 0; i < n; ++i) res.alpha[i] *= y[i];
      alphas.push_back(res.alpha);
      if (diagnostics) diagnostics->push_back(std::move(res));
    }

    // Support pool: rows with a non-zero coefficient in any machine.
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& a : alphas)
        if (a[i] != 0.0) {
          pool.push_back(i);
          break;
        }

    if (pool_rows) *pool_rows = pool;
    SvmModel m;
    m.config_ = cfg;
    m.norm_ = std::move(norm);
    m.class_ids_ = ids;
    m.support_ = standardized.select_rows(pool);
    for (std::size_t c = 0; c < ids.size(); ++c) {
      BinaryMachine bm;
      bm.rho = rhos[c];
      for (std::size_t p : pool) bm.coef.push_back(alphas[c][p]);
      m.machines_.push_back(std::move(bm));
    }
    return m;
  }

  static SvmModel fit(const TrainingSet& train, const SvmConfig& cfg) {
    require(train.task() == Task::classify, ErrorKind::validation, "SVM supports classification schemas only");
    cfg.validate();
    audit_training_rows(train.x);
    Standardizer norm = Standardizer::fit(train.x);
    const Matrix z = norm.transform(train.x);
    const Matrix base = cfg.kernel == KernelKind::linear ? gram(z, z) : squared_distances(z, z);
    Matrix kmat = kernel_from(base, cfg);
    if (cfg.kernel == KernelKind::rbf)
      for (std::size_t i = 0; i < kmat.rows; ++i) kmat(i, i) = 1.0;
    return fit_with_kernel(z, train.classes, KernelView{kmat.data, kmat.rows}, cfg, std::move(norm));
  }

  /// One decision value per class, in class_ids() order.
  std::vector<double> decision_values(std::span<const double> raw) const {
    require(raw.size() == feature_length(), ErrorKind::shape,
            "feature length " + std::to_string(raw.size()) + " != trained length " + std::to_string(feature_length()));
    const auto z = norm_.transform(raw);
    return decision_values_standardized(z);
  }

  std::vector<double> decision_values_standardized(std::span<const double> z) const {
    std::vector<double> kv(support_.rows);
    for (std::size_t p = 0; p < support_.rows; ++p) kv[p] = kernel_value(support_.row(p), z, config_);
    return decisions_from_kernel(kv);
  }

  /// Decision values given kernel values against the support pool.
  std::vector<double> decisions_from_kernel(std::span<const double> kv) const {
    std::vector<double> out(machines_.size());
    for (std::size_t c = 0; c < machines_.size(); ++c) out[c] = dot(machines_[c].coef, kv) - machines_[c].rho;
    return out;
  }

  int predict_class(std::span<const double> raw) const { return class_ids_[argmax(decision_values(raw))]; }

  const SvmConfig& config() const { return config_; }
  const Standardizer& normalization() const { return norm_; }
  const std::vector<int>& class_ids() const { return class_ids_; }
  const Matrix& support() const { return support_; }
  const std::vector<BinaryMachine>& machines() const { return machines_; }
  std::size_t feature_length() const { return norm_.size() ? norm_.size() : support_.cols; }

  static SvmModel from_parts(SvmConfig cfg, Standardizer norm, std::vector<int> ids, Matrix support,
                             std::vector<BinaryMachine> machines) {
    SvmModel m;
    m.config_ = cfg;
    m.norm_ = std::move(norm);
    m.class_ids_ = std::move(ids);
    m.support_ = std::move(support);
    m.machines_ = std::move(machines);
    return m;
  }

 private:
  SvmConfig config_;
  Standardizer norm_;
  std::vector<int> class_ids_;
  Matrix support_;
  std::vector<BinaryMachine> machines_;
};

}  // namespace acoustaxel::learn
