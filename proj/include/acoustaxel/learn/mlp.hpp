#pragma once

#include <acoustaxel/learn/common.hpp>
#include <acoustaxel/rng.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace acoustaxel::learn {

enum class Activation { relu, tanh };

struct MlpConfig {
  std::vector<int> hidden_layers = {128, 64};
  Activation activation = Activation::relu;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;

  void validate() const {
    require(!hidden_layers.empty(), ErrorKind::validation, "MLP needs at least one hidden layer");
    for (int h : hidden_layers) require(h >= 1, ErrorKind::validation, "hidden layer sizes must be positive");
    require(epochs >= 1, ErrorKind::validation, "epochs must be >= 1");
    require(batch_size >= 1, ErrorKind::validation, "batch_size must be >= 1");
    require(learning_rate > 0.0 && momentum >= 0.0 && momentum < 1.0, ErrorKind::validation,
            "learning_rate must be positive and momentum in [0, 1)");
  }
};

/// Targets for one batch: class positions (softmax output) or real values (linear output).
struct MlpTargets {
  std::vector<int> classes;
  std::vector<double> values;
};

/// Fully connected network with all weights in one flat vector. Layer l
/// stores W (out x in, row-major) followed by b (out).
class MlpNetwork {
 public:
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  MlpNetwork() = default;
  MlpNetwork(std::vector<int> layer_sizes, Activation act, Task task)
      : sizes_(std::move(layer_sizes)), activation_(act), task_(task) {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
      total += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    params_.assign(total, 0.0);
  }

  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Task task() const { return task_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void initialize(Rng& rng) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double limit = activation_ == Activation::relu ? std::sqrt(6.0 / in) : std::sqrt(6.0 / (in + out));
      for (int i = 0; i < out * in; ++i) params_[offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
      offset += static_cast<std::size_t>(out) * in;
      for (int i = 0; i < out; ++i) params_[offset + i] = 0.0;
      offset += static_cast<std::size_t>(out);
    }
  }

  /// Output layer values (logits for classification) for a batch.
  RowMat forward(const RowMat& x) const {
    std::vector<RowMat> pre, post;
    return run(x, pre, post);
  }

  /// Mean loss over the batch; fills `grad` (same layout as params).
  double loss_and_gradient(const RowMat& x, const MlpTargets& t, std::vector<double>& grad) const {
    std::vector<RowMat> pre, post;
    const RowMat out = run(x, pre, post);
    const auto batch = static_cast<double>(x.rows());
    RowMat delta(out.rows(), out.cols());
    double loss = 0.0;
    if (task_ == Task::classify) {
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        const Eigen::RowVectorXd e = (out.row(r).array() - m).exp();
        const double z = e.sum();
        delta.row(r) = e / z;
        const int y = t.classes[static_cast<std::size_t>(r)];
        loss -= (out(r, y) - m) - std::log(z);
        delta(r, y) -= 1.0;
      }
    } else {
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double d = out(r, 0) - t.values[static_cast<std::size_t>(r)];
        loss += 0.5 * d * d;
        delta(r, 0) = d;
      }
    }
    delta /= batch;
    loss /= batch;

    grad.assign(params_.size(), 0.0);
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = layers; l-- > 0;) {
      const int in = sizes_[l], outn = sizes_[l + 1];
      const std::size_t w_at = weight_offset(l);
      const RowMat& input = l == 0 ? x : post[l - 1];
      Eigen::Map<RowMat> gw(grad.data() + w_at, outn, in);
      Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + w_at + static_cast<std::size_t>(outn) * in, outn);
      gw.noalias() = delta.transpose() * input;
      gb = delta.colwise().sum();
      if (l == 0) break;
      Eigen::Map<const RowMat> w(params_.data() + w_at, outn, in);
      RowMat back = delta * w;
      const RowMat& z = pre[l - 1];
      if (activation_ == Activation::relu)
        back = back.array() * (z.array() > 0.0).cast<double>();
      else
        back = back.array() * (1.0 - post[l - 1].array().square());
      delta = std::move(back);
    }
    return loss;
  }

 private:
  std::size_t weight_offset(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer; ++l) offset += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    return offset;
  }

  RowMat run(const RowMat& x, std::vector<RowMat>& pre, std::vector<RowMat>& post) const {
    RowMat a = x;
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const int in = sizes_[l], outn = sizes_[l + 1];
      const std::size_t w_at = weight_offset(l);
      Eigen::Map<const RowMat> w(params_.data() + w_at, outn, in);
      Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + w_at + static_cast<std::size_t>(outn) * in, outn);
      RowMat z = a * w.transpose();
      z.rowwise() += b;
      if (l + 1 == layers) return z;
      pre.push_back(z);
      if (activation_ == Activation::relu)
        a = z.cwiseMax(0.0);
      else
        a = z.array().tanh();
      post.push_back(a);
    }
    return a;
  }

  std::vector<int> sizes_;
  Activation activation_ = Activation::relu;
  Task task_ = Task::classify;
  std::vector<double> params_;
};

class MlpModel {
 public:
  MlpModel() = default;

  static MlpModel fit(const TrainingSet& train, const MlpConfig& cfg) {
    cfg.validate();
    require(train.size() > 0, ErrorKind::validation, "empty training set");
    audit_training_rows(train.x);
    MlpModel m;
    m.config_ = cfg;
    m.norm_ = Standardizer::fit(train.x);
    const Matrix z = m.norm_.transform(train.x);
    const Task task = train.task();

    MlpTargets targets;
    std::size_t outputs = 1;
    if (task == Task::classify) {
      m.class_ids_ = train.distinct_classes();
      require(m.class_ids_.size() >= 2, ErrorKind::validation, "classification needs at least two classes");
      outputs = m.class_ids_.size();
      for (int c : train.classes)
        targets.classes.push_back(static_cast<int>(
            std::lower_bound(m.class_ids_.begin(), m.class_ids_.end(), c) - m.class_ids_.begin()));
    } else {
      double mean = 0.0, var = 0.0;
      for (double v : train.targets) mean += v;
      mean /= static_cast<double>(train.size());
      for (double v : train.targets) var += (v - mean) * (v - mean);
      m.target_mean_ = mean;
      m.target_scale_ = var > 0.0 ? std::sqrt(var / static_cast<double>(train.size())) : 1.0;
      for (double v : train.targets) targets.values.push_back((v - m.target_mean_) / m.target_scale_);
    }

    std::vector<int> sizes{static_cast<int>(z.cols)};
    sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
    sizes.push_back(static_cast<int>(outputs));
    m.net_ = MlpNetwork(sizes, cfg.activation, task);
    Rng rng(cfg.seed);
    m.net_.initialize(rng);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> velocity(m.net_.params().size(), 0.0), grad;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t len = std::min(batch, order.size() - start);
        MlpNetwork::RowMat xb(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(z.cols));
        MlpTargets tb;
        for (std::size_t r = 0; r < len; ++r) {
          const std::size_t src = order[start + r];
          for (std::size_t j = 0; j < z.cols; ++j) xb(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = z(src, j);
          if (task == Task::classify)
            tb.classes.push_back(targets.classes[src]);
          else
            tb.values.push_back(targets.values[src]);
        }
        m.net_.loss_and_gradient(xb, tb, grad);
        auto& p = m.net_.params();
        for (std::size_t k = 0; k < p.size(); ++k) {
          velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
          p[k] += velocity[k];
        }
      }
    }
    return m;
  }

  std::vector<double> outputs(std::span<const double> raw) const {
    require(raw.size() == feature_length(), ErrorKind::shape,
            "feature length " + std::to_string(raw.size()) + " != trained length " + std::to_string(feature_length()));
    const auto z = norm_.transform(raw);
    MlpNetwork::RowMat x(1, static_cast<Eigen::Index>(z.size()));
    for (std::size_t j = 0; j < z.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = z[j];
    const auto out = net_.forward(x);
    return std::vector<double>(out.data(), out.data() + out.size());
  }

  int predict_class(std::span<const double> raw) const { return class_ids_[argmax(outputs(raw))]; }
  double predict_value(std::span<const double> raw) const { return outputs(raw)[0] * target_scale_ + target_mean_; }

  const MlpConfig& config() const { return config_; }
  const Standardizer& normalization() const { return norm_; }
  const MlpNetwork& network() const { return net_; }
  const std::vector<int>& class_ids() const { return class_ids_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }
  std::size_t feature_length() const { return norm_.size(); }

  static MlpModel from_parts(MlpConfig cfg, Standardizer norm, MlpNetwork net, std::vector<int> ids, double mean,
                             double scale) {
    MlpModel m;
    m.config_ = std::move(cfg);
    m.norm_ = std::move(norm);
    m.net_ = std::move(net);
    m.class_ids_ = std::move(ids);
    m.target_mean_ = mean;
    m.target_scale_ = scale;
    return m;
  }

 private:
  MlpConfig config_;
  Standardizer norm_;
  MlpNetwork net_;
  std::vector<int> class_ids_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

}  // namespace acoustaxel::learn
