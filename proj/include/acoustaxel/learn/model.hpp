#pragma once

#include <acoustaxel/learn/common.hpp>
#include <acoustaxel/learn/knn.hpp>
#include <acoustaxel/learn/mlp.hpp>
#include <acoustaxel/learn/svm.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace acoustaxel::learn {

enum class ModelKind : std::uint8_t { knn, svm, mlp };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::svm: return "svm";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view name) {
  if (name == "knn") return ModelKind::knn;
  if (name == "svm" || name == "svc") return ModelKind::svm;
  if (name == "mlp") return ModelKind::mlp;
  fail(ErrorKind::validation, "unknown model kind '" + std::string(name) + "' (expected knn, svm or mlp)");
}

using ModelConfig = std::variant<KnnConfig, SvmConfig, MlpConfig>;

inline ModelKind kind_of(const ModelConfig& cfg) { return static_cast<ModelKind>(cfg.index()); }

inline std::string describe(const ModelConfig& cfg) {
  char buf[160];
  if (const auto* k = std::get_if<KnnConfig>(&cfg)) {
    std::snprintf(buf, sizeof buf, "knn k=%d weighting=%s", k->k,
                  k->weighting == KnnWeighting::uniform ? "uniform" : "inverse_distance");
  } else if (const auto* s = std::get_if<SvmConfig>(&cfg)) {
    if (s->kernel == KernelKind::linear)
      std::snprintf(buf, sizeof buf, "svm kernel=linear c=%g", s->c);
    else
      std::snprintf(buf, sizeof buf, "svm kernel=rbf c=%g gamma=%g", s->c, s->gamma);
  } else {
    const auto& m = std::get<MlpConfig>(cfg);
    std::string layers;
    for (int h : m.hidden_layers) layers += (layers.empty() ? "" : "x") + std::to_string(h);
    std::snprintf(buf, sizeof buf, "mlp hidden=%s activation=%s lr=%g epochs=%d batch=%d", layers.c_str(),
                  m.activation == Activation::relu ? "relu" : "tanh", m.learning_rate, m.epochs, m.batch_size);
  }
  return buf;
}

inline std::vector<ModelConfig> default_knn_grid() {
  std::vector<ModelConfig> grid;
  for (int k : {1, 3, 5, 7, 9}) grid.push_back(KnnConfig{k});
  return grid;
}

/// The rbf grid c x gamma, optionally followed by linear kernels for each c.
inline std::vector<ModelConfig> default_svm_grid(bool include_linear = true) {
  std::vector<ModelConfig> grid;
  const double cs[] = {0.1, 1.0, 10.0, 100.0};
  for (double c : cs)
    for (double g : {1e-4, 1e-3, 1e-2, 1e-1}) grid.push_back(SvmConfig{KernelKind::rbf, c, g});
  if (include_linear)
    for (double c : cs) grid.push_back(SvmConfig{KernelKind::linear, c, 1.0});
  return grid;
}

inline std::vector<ModelConfig> default_grid(ModelKind kind) {
  switch (kind) {
    case ModelKind::knn: return default_knn_grid();
    case ModelKind::svm: return default_svm_grid();
    case ModelKind::mlp: return {MlpConfig{}};
  }
  return {};
}

struct Prediction {
  int class_index = 0;
  double value_mm = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// A trained, immutable predictor plus the label schema it was trained for.
class SensorModel {
 public:
  using Variant = std::variant<KnnModel, SvmModel, MlpModel>;

  SensorModel() = default;
  SensorModel(Variant model, LabelSchema schema) : model_(std::move(model)), schema_(schema) {}

  static SensorModel train(const TrainingSet& train, const ModelConfig& cfg) {
    require(train.size() > 0, ErrorKind::validation, "training split is empty");
    if (train.task() == Task::classify)
      require(train.distinct_classes().size() >= 2, ErrorKind::validation,
              "classification training set has a single class");
    return std::visit(
        [&](const auto& c) -> SensorModel {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, KnnConfig>) {
            KnnConfig k = c;
            k.task = train.task();
            return {KnnModel::fit(train, k), train.schema};
          } else if constexpr (std::is_same_v<C, SvmConfig>) {
            return {SvmModel::fit(train, c), train.schema};
          } else {
            return {MlpModel::fit(train, c), train.schema};
          }
        },
        cfg);
  }

  static SensorModel train(const Dataset& ds, const ModelConfig& cfg) {
    return train(to_training_set(ds, Split::train), cfg);
  }

  ModelKind kind() const { return static_cast<ModelKind>(model_.index()); }
  LabelSchema schema() const { return schema_; }
  Task task() const { return schema_ == LabelSchema::regression_mm ? Task::regress : Task::classify; }
  const Variant& model() const { return model_; }

  std::size_t feature_length() const {
    return std::visit([](const auto& m) { return m.feature_length(); }, model_);
  }

  void check_length(std::size_t n) const {
    require(n == feature_length(), ErrorKind::shape,
            "feature length " + std::to_string(n) + " != trained length " + std::to_string(feature_length()));
  }

  Prediction predict(std::span<const double> x) const {
    check_length(x.size());
    Prediction p;
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, SvmModel>) {
            p.class_index = m.predict_class(x);
          } else if (task() == Task::regress) {
            p.value_mm = m.predict_value(x);
          } else {
            p.class_index = m.predict_class(x);
          }
        },
        model_);
    return p;
  }

  Prediction predict(std::span<const float> x) const {
    std::vector<double> v(x.begin(), x.end());
    return predict(std::span<const double>(v));
  }

  /// Raw scores behind a prediction: neighbour distances and the vote/mean
  /// (KNN), one-vs-rest decision values (SVM) or output layer (MLP).
  std::vector<double> scores(std::span<const double> x) const {
    check_length(x.size());
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, KnnModel>) {
            std::vector<double> out;
            for (const auto& n : m.neighbors(x)) out.push_back(n.squared_distance);
            out.push_back(task() == Task::regress ? m.predict_value(x) : m.predict_class(x));
            return out;
          } else if constexpr (std::is_same_v<M, SvmModel>) {
            return m.decision_values(x);
          } else {
            return m.outputs(x);
          }
        },
        model_);
  }

 private:
  Variant model_;
  LabelSchema schema_ = LabelSchema::classification;
};

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_size(std::size_t n) { put(static_cast<std::uint64_t>(n)); }
  template <typename T>
  void put_vec(const std::vector<T>& v) {
    put_size(v.size());
    for (const auto& x : v) put(x);
  }
  void put_matrix(const Matrix& m) {
    put_size(m.rows);
    put_size(m.cols);
    for (double d : m.data) put(d);
  }
  void put_norm(const Standardizer& s) {
    put_vec(s.mean);
    put_vec(s.scale);
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    require(pos_ + sizeof(T) <= bytes_.size(), ErrorKind::parse,
            "model file truncated at byte offset " + std::to_string(pos_));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t get_size(std::size_t element_size = 1) {
    const auto n = get<std::uint64_t>();
    require(n <= (bytes_.size() - pos_) / element_size, ErrorKind::parse,
            "implausible element count at byte offset " + std::to_string(pos_ - 8));
    return static_cast<std::size_t>(n);
  }
  template <typename T>
  std::vector<T> get_vec() {
    std::vector<T> v(get_size(sizeof(T)));
    for (auto& x : v) x = get<T>();
    return v;
  }
  Matrix get_matrix() {
    const auto rows = get_size();
    const auto cols = get_size();
    require(cols == 0 || rows <= (bytes_.size() - pos_) / (cols * sizeof(double)), ErrorKind::parse,
            "matrix larger than the model file");
    Matrix m(rows, cols);
    for (double& d : m.data) d = get<double>();
    return m;
  }
  Standardizer get_norm() {
    Standardizer s;
    s.mean = get_vec<double>();
    s.scale = get_vec<double>();
    require(s.mean.size() == s.scale.size(), ErrorKind::parse, "normalization vectors differ in length");
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

inline constexpr char kModelMagic[8] = {'A', 'T', 'X', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace detail

inline std::vector<char> serialize(const SensorModel& sm) {
  detail::ByteWriter w;
  for (char c : detail::kModelMagic) w.put(c);
  w.put(detail::kModelVersion);
  w.put(static_cast<std::uint8_t>(sm.kind()));
  w.put(static_cast<std::uint8_t>(sm.schema()));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        w.put_norm(m.normalization());
        if constexpr (std::is_same_v<M, KnnModel>) {
          w.put<std::int32_t>(m.config().k);
          w.put<std::uint8_t>(static_cast<std::uint8_t>(m.config().weighting));
          w.put<std::uint8_t>(static_cast<std::uint8_t>(m.config().task));
          w.put_matrix(m.points());
          w.put_vec(m.classes());
          w.put_vec(m.targets());
        } else if constexpr (std::is_same_v<M, SvmModel>) {
          const auto& c = m.config();
          w.put<std::uint8_t>(static_cast<std::uint8_t>(c.kernel));
          w.put(c.c);
          w.put(c.gamma);
          w.put(c.tol);
          w.put<std::int32_t>(c.max_passes);
          w.put_vec(m.class_ids());
          w.put_matrix(m.support());
          w.put_size(m.machines().size());
          for (const auto& bm : m.machines()) {
            w.put(bm.rho);
            w.put_vec(bm.coef);
          }
        } else {
          const auto& c = m.config();
          w.put_vec(c.hidden_layers);
          w.put<std::uint8_t>(static_cast<std::uint8_t>(c.activation));
          w.put(c.learning_rate);
          w.put(c.momentum);
          w.put<std::int32_t>(c.epochs);
          w.put<std::int32_t>(c.batch_size);
          w.put(c.seed);
          w.put_vec(m.class_ids());
          w.put(m.target_mean());
          w.put(m.target_scale());
          w.put_vec(m.network().sizes());
          w.put<std::uint8_t>(static_cast<std::uint8_t>(m.network().task()));
          w.put_vec(m.network().params());
        }
      },
      sm.model());
  return w.bytes();
}

inline SensorModel deserialize(std::span<const char> bytes) {
  detail::ByteReader r(bytes);
  for (char c : detail::kModelMagic)
    require(r.get<char>() == c, ErrorKind::parse, "not an acoustaxel model file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  require(version == detail::kModelVersion, ErrorKind::parse,
          "unsupported model file version " + std::to_string(version));
  const auto kind = r.get<std::uint8_t>();
  const auto schema = r.get<std::uint8_t>();
  require(kind <= 2, ErrorKind::parse, "unknown model kind code " + std::to_string(kind));
  require(schema <= 2, ErrorKind::parse, "unknown label schema code " + std::to_string(schema));
  Standardizer norm = r.get_norm();

  SensorModel::Variant model;
  if (kind == static_cast<std::uint8_t>(ModelKind::knn)) {
    KnnConfig c;
    c.k = r.get<std::int32_t>();
    c.weighting = static_cast<KnnWeighting>(r.get<std::uint8_t>());
    c.task = static_cast<Task>(r.get<std::uint8_t>());
    Matrix points = r.get_matrix();
    auto classes = r.get_vec<int>();
    auto targets = r.get_vec<double>();
    require(classes.size() == points.rows && targets.size() == points.rows && norm.size() == points.cols,
            ErrorKind::parse, "inconsistent KNN model sizes");
    model = KnnModel::from_parts(c, std::move(norm), std::move(points), std::move(classes), std::move(targets));
  } else if (kind == static_cast<std::uint8_t>(ModelKind::svm)) {
    SvmConfig c;
    c.kernel = static_cast<KernelKind>(r.get<std::uint8_t>());
    c.c = r.get<double>();
    c.gamma = r.get<double>();
    c.tol = r.get<double>();
    c.max_passes = r.get<std::int32_t>();
    auto ids = r.get_vec<int>();
    Matrix support = r.get_matrix();
    std::vector<BinaryMachine> machines(r.get_size(16));
    for (auto& bm : machines) {
      bm.rho = r.get<double>();
      bm.coef = r.get_vec<double>();
      require(bm.coef.size() == support.rows, ErrorKind::parse, "SVM coefficient count != support count");
    }
    require(machines.size() == ids.size() && norm.size() == support.cols, ErrorKind::parse,
            "inconsistent SVM model sizes");
    model = SvmModel::from_parts(c, std::move(norm), std::move(ids), std::move(support), std::move(machines));
  } else {
    MlpConfig c;
    c.hidden_layers = r.get_vec<int>();
    c.activation = static_cast<Activation>(r.get<std::uint8_t>());
    c.learning_rate = r.get<double>();
    c.momentum = r.get<double>();
    c.epochs = r.get<std::int32_t>();
    c.batch_size = r.get<std::int32_t>();
    c.seed = r.get<std::uint64_t>();
    auto ids = r.get_vec<int>();
    const double mean = r.get<double>();
    const double scale = r.get<double>();
    auto sizes = r.get_vec<int>();
    const auto task = static_cast<Task>(r.get<std::uint8_t>());
    require(sizes.size() >= 2 && static_cast<std::size_t>(sizes.front()) == norm.size(), ErrorKind::parse,
            "inconsistent MLP layer sizes");
    MlpNetwork net(sizes, c.activation, task);
    auto params = r.get_vec<double>();
    require(params.size() == net.params().size(), ErrorKind::parse, "MLP parameter count mismatch");
    net.params() = std::move(params);
    model = MlpModel::from_parts(c, std::move(norm), std::move(net), std::move(ids), mean, scale);
  }
  require(r.done(), ErrorKind::parse, "trailing bytes after model payload");
  return {std::move(model), static_cast<LabelSchema>(schema)};
}

inline void save_model(const SensorModel& m, const std::filesystem::path& path) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

inline SensorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace acoustaxel::learn
