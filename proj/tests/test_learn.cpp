#include <acoustaxel/learn/grid_search.hpp>
#include <acoustaxel/learn/metrics.hpp>
#include <acoustaxel/learn/model.hpp>

#include "oracles.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

using namespace acoustaxel;
using namespace acoustaxel::learn;
using braille::TaxelCoord;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TrainingSet make_set(const std::vector<std::vector<double>>& rows, const std::vector<int>& classes,
                     std::vector<double> targets = {}, LabelSchema schema = LabelSchema::classification) {
  TrainingSet t;
  t.schema = schema;
  t.x = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.x(i, j) = rows[i][j];
  t.classes = classes;
  t.targets = targets.empty() ? std::vector<double>(rows.size(), 0.0) : targets;
  return t;
}

// Gaussian blobs, one per class, in `dims` dimensions.
TrainingSet blobs(std::size_t per_class, int n_classes, std::size_t dims, double spread, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(n_classes), std::vector<double>(dims));
  for (auto& c : centers)
    for (double& v : c) v = 4 * rng.normal();
  std::vector<std::vector<double>> rows;
  std::vector<int> classes;
  for (std::size_t i = 0; i < per_class; ++i)
    for (int c = 0; c < n_classes; ++c) {
      std::vector<double> r(dims);
      for (std::size_t j = 0; j < dims; ++j) r[j] = centers[static_cast<std::size_t>(c)][j] + spread * rng.normal();
      rows.push_back(r);
      classes.push_back(c);
    }
  return make_set(rows, classes);
}

double training_accuracy(const SensorModel& m, const TrainingSet& t) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < t.size(); ++i) hit += m.predict(t.x.row(i)).class_index == t.classes[i];
  return static_cast<double>(hit) / static_cast<double>(t.size());
}

SvmConfig svm(KernelKind kernel, double c, double gamma = 1.0) {
  SvmConfig s;
  s.kernel = kernel;
  s.c = c;
  s.gamma = gamma;
  return s;
}

}  // namespace

TEST_CASE("KNN with k=1 reproduces its training labels") {
  const auto t = blobs(30, 4, 6, 3.0, 1);  // overlapping blobs, still distinct rows
  KnnConfig cfg;
  cfg.k = 1;
  const auto m = SensorModel::train(t, cfg);
  CHECK(training_accuracy(m, t) == 1.0);
}

TEST_CASE("KNN regression averages neighbour labels") {
  const auto t = make_set({{0.0}, {0.1}, {0.2}, {50.0}}, {0, 0, 1, 2}, {2.45, 2.45, 6.42, 100.0},
                          LabelSchema::regression_mm);
  KnnConfig cfg;
  cfg.k = 3;
  const auto m = SensorModel::train(t, cfg);
  CHECK(m.task() == Task::regress);
  CHECK_THAT(m.predict(std::vector<double>{0.05}).value_mm, WithinAbs((2.45 + 2.45 + 6.42) / 3, 1e-12));
  CHECK_THAT(m.predict(std::vector<double>{0.05}).value_mm, WithinAbs(3.7733, 1e-4));
}

TEST_CASE("KNN with k equal to the training size predicts the global majority and mean") {
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<int> classes;
  std::vector<double> targets;
  for (int i = 0; i < 21; ++i) {
    rows.push_back({rng.normal(), rng.normal()});
    classes.push_back(i < 12 ? 4 : (i < 17 ? 1 : 2));
    targets.push_back(rng.uniform() * 10);
  }
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / 21;
  KnnConfig cfg;
  cfg.k = 21;
  const auto cls = SensorModel::train(make_set(rows, classes), cfg);
  const auto reg = SensorModel::train(make_set(rows, classes, targets, LabelSchema::regression_mm), cfg);
  for (int q = 0; q < 50; ++q) {
    const std::vector<double> x{5 * rng.normal(), 5 * rng.normal()};
    CHECK(cls.predict(x).class_index == 4);
    CHECK_THAT(reg.predict(x).value_mm, WithinAbs(mean, 1e-12));
  }
}

TEST_CASE("KNN predictions do not depend on per-feature affine rescaling") {
  const auto t = blobs(20, 3, 5, 2.5, 9);
  auto scaled = t;
  const std::vector<double> a = {1e3, 0.01, 7, 1, 250}, b = {5, -3, 1e4, 0, -8};
  for (std::size_t i = 0; i < scaled.size(); ++i)
    for (std::size_t j = 0; j < 5; ++j) scaled.x(i, j) = a[j] * t.x(i, j) + b[j];
  KnnConfig cfg;
  cfg.k = 5;
  const auto m1 = SensorModel::train(t, cfg), m2 = SensorModel::train(scaled, cfg);
  Rng rng(2);
  for (int q = 0; q < 100; ++q) {
    std::vector<double> x(5), y(5);
    for (std::size_t j = 0; j < 5; ++j) {
      x[j] = 6 * rng.normal();
      y[j] = a[j] * x[j] + b[j];
    }
    CHECK(m1.predict(x).class_index == m2.predict(y).class_index);
  }
}

TEST_CASE("KNN config validation") {
  const auto t = blobs(3, 2, 2, 1, 1);
  KnnConfig cfg;
  cfg.k = 4;
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, cfg); }) == ErrorKind::validation);
  cfg.k = 7;
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, cfg); }) == ErrorKind::validation);
}

TEST_CASE("linear SVM splits a symmetric pair at zero") {
  const auto t = make_set({{-1.0}, {1.0}}, {0, 1});
  const auto m = SensorModel::train(t, svm(KernelKind::linear, 1000));
  CHECK(m.predict(std::vector<double>{-1.0}).class_index == 0);
  CHECK(m.predict(std::vector<double>{1.0}).class_index == 1);
  const auto at_zero = m.scores(std::vector<double>{0.0});
  CHECK_THAT(at_zero[0], WithinAbs(0.0, 1e-9));
  CHECK_THAT(at_zero[1], WithinAbs(0.0, 1e-9));
  CHECK(m.predict(std::vector<double>{-0.01}).class_index == 0);
  CHECK(m.predict(std::vector<double>{0.01}).class_index == 1);
}

TEST_CASE("SVM on XOR matches the brute-force dual and satisfies KKT") {
  const std::vector<std::vector<double>> pts = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::array<int, 4> y = {1, 1, -1, -1};
  const double c = 10, gamma = 1;
  std::array<std::array<double, 4>, 4> kernel{};
  std::vector<double> kflat(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double d2 = std::pow(pts[i][0] - pts[j][0], 2) + std::pow(pts[i][1] - pts[j][1], 2);
      kernel[i][j] = kflat[i * 4 + j] = std::exp(-gamma * d2);
    }
  const std::vector<std::int8_t> y8(y.begin(), y.end());
  const auto res = solve_smo(KernelView{kflat, 4}, y8, c, 1e-7, 10000);
  REQUIRE(res.converged);

  const auto oracle_sol = oracle::brute_force_dual4(kernel, y, c);
  const double smo_objective = dual_objective(KernelView{kflat, 4}, y8, res.alpha);
  CHECK(std::abs(smo_objective - oracle_sol.objective) <= 1e-4);
  for (int i = 0; i < 4; ++i) CHECK_THAT(res.alpha[i], WithinAbs(oracle_sol.alpha[i], 1e-3));

  // KKT on the margin values y_i f(x_i).
  double balance = 0;
  for (int i = 0; i < 4; ++i) {
    double f = -res.rho;
    for (int j = 0; j < 4; ++j) f += res.alpha[j] * y[j] * kernel[j][i];
    const double margin = y[i] * f;
    const double a = res.alpha[i];
    CHECK(a >= 0.0);
    CHECK(a <= c);
    if (a <= 0.0) CHECK(margin >= 1 - 1e-6);
    else if (a >= c) CHECK(margin <= 1 + 1e-6);
    else CHECK(std::abs(margin - 1) <= 1e-6);
    balance += a * y[i];
  }
  CHECK(std::abs(balance) <= 1e-6);

  // The full model classifies all four training points.
  const auto m = SensorModel::train(make_set(pts, {0, 0, 1, 1}), svm(KernelKind::rbf, c, gamma));
  CHECK(training_accuracy(m, make_set(pts, {0, 0, 1, 1})) == 1.0);
}

TEST_CASE("every one-vs-rest machine is dual feasible") {
  const auto t = blobs(25, 5, 4, 2.0, 12);
  for (const auto& cfg : {svm(KernelKind::rbf, 1, 0.1), svm(KernelKind::rbf, 100, 0.5), svm(KernelKind::linear, 0.5)}) {
    const auto norm = Standardizer::fit(t.x);
    const auto z = norm.transform(t.x);
    const auto base = cfg.kernel == KernelKind::linear ? gram(z, z) : squared_distances(z, z);
    const auto k = kernel_from(base, cfg);
    std::vector<SmoResult> diag;
    SvmModel::fit_with_kernel(z, t.classes, KernelView{k.data, k.rows}, cfg, norm, &diag);
    REQUIRE(diag.size() == 5);
    for (std::size_t m = 0; m < diag.size(); ++m) {
      double balance = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double y = t.classes[i] == static_cast<int>(m) ? 1 : -1;
        const double alpha = diag[m].alpha[i] * y;  // stored as alpha * y
        CHECK(alpha >= -1e-12);
        CHECK(alpha <= cfg.c + 1e-12);
        balance += diag[m].alpha[i];
      }
      CHECK(std::abs(balance) <= 1e-6);
      CHECK(diag[m].converged);
      CHECK(diag[m].kkt_gap < cfg.tol);
    }
  }
}

TEST_CASE("one-vs-rest prediction is the argmax of decision values") {
  Matrix support(1, 2);
  std::vector<BinaryMachine> machines = {{{0.0}, 0.2}, {{0.0}, -0.7}, {{0.0}, -0.1}};
  const auto model = SvmModel::from_parts(svm(KernelKind::linear, 1), Standardizer::fit(Matrix(0, 2)), {0, 1, 2}, support, machines);
  const auto d = model.decision_values(std::vector<double>{0.3, -2.0});
  CHECK_THAT(d[0], WithinAbs(-0.2, 1e-15));
  CHECK_THAT(d[1], WithinAbs(0.7, 1e-15));
  CHECK_THAT(d[2], WithinAbs(0.1, 1e-15));
  CHECK(model.predict_class(std::vector<double>{0.3, -2.0}) == 1);
}

TEST_CASE("argmax survives strictly monotone rescaling") {
  Rng rng(8);
  const std::vector<std::function<double(double)>> transforms = {
      [](double v) { return 3 * v + 1; }, [](double v) { return std::exp(v); }, [](double v) { return std::tanh(v); },
      [](double v) { return v * v * v; }};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(2 + rng.below(20));
    for (double& v : d) v = rng.normal();
    for (const auto& g : transforms) {
      std::vector<double> e(d.size());
      std::transform(d.begin(), d.end(), e.begin(), g);
      CHECK(argmax(e) == argmax(d));
    }
  }
}

TEST_CASE("SVM config validation and schema restrictions") {
  const auto t = blobs(5, 2, 2, 1, 1);
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, svm(KernelKind::rbf, 0)); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, svm(KernelKind::rbf, 1, -1)); }) == ErrorKind::validation);
  auto reg = t;
  reg.schema = LabelSchema::regression_mm;
  CHECK(testing::kind_of_failure([&] { SensorModel::train(reg, svm(KernelKind::rbf, 1)); }) == ErrorKind::validation);
}

TEST_CASE("MLP gradients match central differences") {
  Rng rng(4);
  for (int trial = 0; trial < 12; ++trial) {
    const auto act = trial % 2 ? Activation::relu : Activation::tanh;
    const auto task = trial % 3 == 2 ? Task::regress : Task::classify;
    std::vector<int> sizes = {static_cast<int>(1 + rng.below(6))};
    const auto hidden = 1 + rng.below(2);
    for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(static_cast<int>(1 + rng.below(10)));
    sizes.push_back(task == Task::regress ? 1 : static_cast<int>(2 + rng.below(4)));
    MlpNetwork net(sizes, act, task);
    net.initialize(rng);
    for (double& p : net.params()) p += 0.1 * rng.normal();  // non-zero biases

    const Eigen::Index batch = 5;
    MlpNetwork::RowMat x(batch, sizes[0]);
    for (Eigen::Index r = 0; r < batch; ++r)
      for (Eigen::Index c = 0; c < sizes[0]; ++c) x(r, c) = rng.normal();
    MlpTargets t;
    for (Eigen::Index r = 0; r < batch; ++r) {
      if (task == Task::classify)
        t.classes.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(sizes.back()))));
      else
        t.values.push_back(rng.normal());
    }

    std::vector<double> grad;
    net.loss_and_gradient(x, t, grad);
    const auto numeric = oracle::finite_difference(
        [&](const std::vector<double>& p) {
          MlpNetwork probe = net;
          probe.params() = p;
          std::vector<double> unused;
          return probe.loss_and_gradient(x, t, unused);
        },
        net.params(), 1e-5);

    INFO("trial " << trial << " layers " << sizes.size());
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      diff += std::pow(grad[i] - numeric[i], 2);
      norm += std::pow(numeric[i], 2);
      CHECK(std::abs(grad[i] - numeric[i]) <= 1e-4 * std::max(std::abs(numeric[i]), 1e-3));
    }
    CHECK(std::sqrt(diff) <= 1e-4 * std::sqrt(norm));
  }
}

TEST_CASE("MLP learns separable blobs and a linear target") {
  const auto t = blobs(30, 3, 4, 0.5, 21);
  MlpConfig cfg;
  cfg.hidden_layers = {16};
  cfg.epochs = 40;
  cfg.seed = 3;
  const auto m = SensorModel::train(t, cfg);
  CHECK(training_accuracy(m, t) == 1.0);

  Rng rng(6);
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    rows.push_back({a, b});
    targets.push_back(3 * a - 2 * b + 1);
  }
  cfg.activation = Activation::tanh;
  cfg.epochs = 200;
  const auto r = SensorModel::train(make_set(rows, std::vector<int>(200, 0), targets, LabelSchema::regression_mm), cfg);
  std::vector<double> pred;
  for (const auto& row : rows) pred.push_back(r.predict(row).value_mm);
  CHECK(rmse(pred, targets) < 0.1);
}

TEST_CASE("predictions are deterministic and length-checked") {
  const auto t = blobs(10, 3, 3, 1.0, 2);
  MlpConfig mlp;
  mlp.hidden_layers = {8};
  mlp.epochs = 5;
  KnnConfig knn;
  knn.k = 3;
  for (const ModelConfig& cfg : {ModelConfig{knn}, ModelConfig{svm(KernelKind::rbf, 1, 0.3)}, ModelConfig{mlp}}) {
    const auto m = SensorModel::train(t, cfg);
    const std::vector<double> x = {0.3, -1.2, 4.0};
    CHECK(m.predict(x) == m.predict(x));
    CHECK(m.scores(x) == m.scores(x));
    CHECK(testing::kind_of_failure([&] { m.predict(std::vector<double>{1.0, 2.0}); }) == ErrorKind::shape);
  }
  // Retraining from the same data and seed yields the same model.
  const auto a = SensorModel::train(t, mlp), b = SensorModel::train(t, mlp);
  CHECK(serialize(a) == serialize(b));
}

TEST_CASE("single-class classification data is rejected") {
  const auto t = make_set({{1.0}, {2.0}, {3.0}}, {5, 5, 5});
  KnnConfig knn;
  knn.k = 1;
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, knn); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([&] { SensorModel::train(t, svm(KernelKind::linear, 1)); }) == ErrorKind::validation);
}

TEST_CASE("zero-variance features are left unscaled") {
  Matrix x(3, 2);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  x(0, 1) = x(1, 1) = x(2, 1) = 7;
  const auto s = Standardizer::fit(x);
  CHECK(s.scale[1] == 1.0);
  CHECK(s.mean[1] == 7.0);
  const auto z = s.transform(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 1) == 0.0);
}

TEST_CASE("training under an isolation audit flags held-out rows") {
  const auto t = blobs(10, 2, 3, 1.0, 5);
  const auto held = t.subset(std::vector<std::size_t>{0, 1, 2});
  KnnConfig knn;
  knn.k = 1;
  {
    IsolationAudit audit(held.x);
    ScopedAudit guard(audit);
    SensorModel::train(t.subset(std::vector<std::size_t>{3, 4, 5, 6, 7, 8}), knn);
    CHECK(audit.violations() == 0);
    CHECK(audit.rows_checked() == 6);
    SensorModel::train(t, knn);
    CHECK(audit.violations() == 3);
  }
  CHECK(detail::active_audit() == nullptr);
}

TEST_CASE("grid search with one configuration returns it") {
  const auto t = blobs(10, 2, 3, 1.0, 5);
  KnnConfig knn;
  knn.k = 3;
  const auto r = grid_search(t, {knn}, 5);
  CHECK(std::get<KnnConfig>(r.best).k == 3);
  CHECK(r.table.size() == 1);
  CHECK(r.table[0].fold_scores.size() == 5);
}

TEST_CASE("grid search rejects k larger than the fold training size") {
  const auto t = blobs(100, 2, 3, 1.0, 5);  // 200 training rows
  REQUIRE(t.size() == 200);
  KnnConfig k1, k201;
  k1.k = 1;
  k201.k = 201;
  const auto r = grid_search(t, {k201, k1}, 5);
  CHECK(r.table[0].rejected);
  CHECK_FALSE(r.table[1].rejected);
  CHECK(r.best_index == 1);
  CHECK(std::get<KnnConfig>(r.best).k == 1);

  CHECK(testing::kind_of_failure([&] { grid_search(t, {k201}, 5); }) == ErrorKind::validation);
}

TEST_CASE("grid search prefers a working linear SVM over a broken one") {
  // Two classes split by the sign of x0 with a wide margin, unequal in size
  // so a uniformly bounded dual cannot place the threshold correctly.
  Rng rng(10);
  std::vector<std::vector<double>> rows;
  std::vector<int> classes;
  for (int i = 0; i < 90; ++i) {
    const int cls = i % 3 == 0 ? 1 : 0;
    const double x0 = cls ? 1 + rng.uniform() * 0.2 : -5 + rng.uniform() * 4;
    rows.push_back({x0, 3 * rng.normal(), 3 * rng.normal()});
    classes.push_back(cls);
  }
  const auto t = make_set(rows, classes);

  const auto broken = svm(KernelKind::linear, 1e-6);
  const auto r = grid_search(t, {broken, svm(KernelKind::linear, 1), svm(KernelKind::linear, 10)}, 5);
  INFO("broken config CV accuracy " << r.table[0].mean);
  REQUIRE(r.table[0].mean < 1.0);
  CHECK(r.table[1].mean == 1.0);
  CHECK(r.table[2].mean == 1.0);
  CHECK(r.best_index == 1);

  // Direct evaluation agrees: trained on everything, c = 1 separates the set.
  CHECK(training_accuracy(SensorModel::train(t, svm(KernelKind::linear, 1)), t) == 1.0);
}

TEST_CASE("grid search ranks regression configs by lowest RMSE") {
  Rng rng(12);
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 60; ++i) {
    const double v = rng.uniform() * 10;
    rows.push_back({v + 0.01 * rng.normal()});
    targets.push_back(v);
  }
  const auto t = make_set(rows, std::vector<int>(60, 0), targets, LabelSchema::regression_mm);
  KnnConfig k1, k9;
  k1.k = 1;
  k9.k = 9;
  const auto r = grid_search(t, {k9, k1}, 4, FoldMode::interleaved);
  CHECK(r.task == Task::regress);
  CHECK(r.table[1].mean < r.table[0].mean);
  CHECK(r.best_index == 1);
}

TEST_CASE("folds") {
  const auto t = blobs(6, 3, 2, 1.0, 1);
  const auto strat = make_folds(t, 3, FoldMode::stratified);
  std::vector<int> seen(t.size(), 0);
  for (const auto& f : strat) {
    std::map<int, int> per_class;
    for (auto i : f) {
      ++seen[i];
      ++per_class[t.classes[i]];
    }
    for (const auto& [cls, n] : per_class) CHECK(n == 2);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(testing::kind_of_failure([&] { make_folds(t, 7, FoldMode::stratified); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([&] { make_folds(t, 1, FoldMode::stratified); }) == ErrorKind::validation);
  const auto inter = make_folds(t, 4, FoldMode::interleaved);
  CHECK(inter[1].front() == 1);
  CHECK(inter[1][1] == 5);
}

TEST_CASE("rmse") {
  const std::vector<double> a = {1.5, -2, 3};
  CHECK(rmse(a, a) == 0.0);
  CHECK_THAT(rmse(std::vector<double>{1, 3}, std::vector<double>{0, 0}), WithinAbs(std::sqrt(5.0), 1e-15));
  CHECK_THAT(rmse(std::vector<double>{1, 3}, std::vector<double>{0, 0}), WithinAbs(2.2360, 1e-4));
  CHECK(testing::kind_of_failure([] { rmse(std::vector<double>{}, std::vector<double>{}); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([] { rmse(std::vector<double>{1}, std::vector<double>{1, 2}); }) ==
        ErrorKind::validation);
}

TEST_CASE("classification and per-axis rates") {
  ConfusionMatrix diag({"a", "b", "c"});
  for (int i = 0; i < 3; ++i) diag.add(i, i, 4);
  CHECK(classification_rate(diag) == 1.0);

  ConfusionMatrix mixed({"a", "b"});
  mixed.add(0, 0, 3);
  mixed.add(0, 1, 1);
  mixed.add(1, 1, 2);
  CHECK(classification_rate(mixed) == 5.0 / 6.0);
  CHECK(mixed.row_sum(0) == 4);
  CHECK(mixed.row_sum(1) == 2);
  CHECK(testing::kind_of_failure([&] { mixed.add(2, 0); }) == ErrorKind::bounds);
  CHECK(testing::kind_of_failure([] { classification_rate(ConfusionMatrix({"a"})); }) == ErrorKind::validation);

  const std::vector<TaxelCoord> truth = {{3, 1}, {5, 2}}, pred = {{3, 1}, {6, 2}};
  const auto rates = per_axis_rate(pred, truth);
  CHECK(rates.x_rate == 0.5);
  CHECK(rates.y_rate == 1.0);
  CHECK(rates.joint_rate == 0.5);
  CHECK(testing::kind_of_failure([] { per_axis_rate({}, {}); }) == ErrorKind::validation);
}

TEST_CASE("taxel error map") {
  const std::vector<TaxelCoord> exact = {{0, 0}, {4, 2}, {4, 2}};
  const auto zero = taxel_error_map(exact, exact);
  for (std::size_t i = 0; i < zero.count.size(); ++i)
    if (zero.count[i]) CHECK(zero.mean_distance[i] == 0.0);
  CHECK(zero.count[2 * 29 + 4] == 2);
  CHECK(zero.blank(3, 3));

  const std::vector<TaxelCoord> truth = {{0, 0}}, pred = {{3, 4}};
  const auto m = taxel_error_map(pred, truth);
  CHECK(m.at(0, 0) == 5.0);
  CHECK(mean_error_distance(m) == 5.0);
  CHECK(taxel_error_map(pred, truth, 4, 29, DistanceMetric::manhattan).at(0, 0) == 7.0);
  CHECK(testing::kind_of_failure([&] { taxel_error_map(pred, exact); }) == ErrorKind::validation);
}

TEST_CASE("model files round-trip with identical predictions") {
  testing::TempDir dir("model");
  const auto t = blobs(12, 3, 6, 1.5, 31);
  auto reg = t;
  reg.schema = LabelSchema::regression_mm;
  for (std::size_t i = 0; i < reg.size(); ++i) reg.targets[i] = reg.x(i, 0) * 2;
  MlpConfig mlp;
  mlp.hidden_layers = {7, 5};
  mlp.epochs = 10;
  KnnConfig knn;
  knn.k = 3;
  knn.weighting = KnnWeighting::inverse_distance;

  const std::vector<std::pair<TrainingSet, ModelConfig>> cases = {
      {t, knn}, {reg, knn}, {t, svm(KernelKind::rbf, 10, 0.2)}, {t, svm(KernelKind::linear, 1)}, {t, mlp}, {reg, mlp}};
  Rng rng(1);
  for (const auto& [set, cfg] : cases) {
    const auto m = SensorModel::train(set, cfg);
    save_model(m, dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    CHECK(back.kind() == m.kind());
    CHECK(back.schema() == m.schema());
    CHECK(serialize(back) == serialize(m));
    for (int q = 0; q < 20; ++q) {
      std::vector<double> x(6);
      for (double& v : x) v = 3 * rng.normal();
      const auto s1 = m.scores(x), s2 = back.scores(x);
      REQUIRE(s1.size() == s2.size());
      if (m.kind() == ModelKind::mlp) {
        for (std::size_t i = 0; i < s1.size(); ++i) CHECK(std::abs(s1[i] - s2[i]) <= 1e-12);
      } else {
        CHECK(std::memcmp(s1.data(), s2.data(), s1.size() * sizeof(double)) == 0);
      }
      CHECK(m.predict(x) == back.predict(x));
    }
  }
}

TEST_CASE("corrupt model files are rejected") {
  testing::TempDir dir("model");
  KnnConfig knn;
  knn.k = 1;
  const auto bytes = serialize(SensorModel::train(blobs(3, 2, 2, 1, 1), knn));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(testing::kind_of_failure([&] { deserialize(truncated); }) == ErrorKind::parse);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(testing::kind_of_failure([&] { deserialize(bad_magic); }) == ErrorKind::parse);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(testing::kind_of_failure([&] { deserialize(trailing); }) == ErrorKind::parse);
  CHECK(testing::kind_of_failure([&] { load_model(dir / "absent.bin"); }) == ErrorKind::io);
}

TEST_CASE("model kinds and descriptions") {
  CHECK(parse_model_kind("svm") == ModelKind::svm);
  CHECK(parse_model_kind("svc") == ModelKind::svm);
  CHECK(parse_model_kind("knn") == ModelKind::knn);
  CHECK(testing::kind_of_failure([] { parse_model_kind("cnn"); }) == ErrorKind::validation);
  CHECK(describe(svm(KernelKind::rbf, 1, 0.001)) == "svm kernel=rbf c=1 gamma=0.001");
  CHECK(default_knn_grid().size() == 5);
  const auto g = default_svm_grid(false);
  CHECK(g.size() == 16);
}

TEST_CASE("rows shared by both splits are not counted as leaks") {
  Matrix held(2, 2), train(2, 2);
  held(0, 0) = 1;  // identical to train row 0
  train(0, 0) = 1;
  held(1, 0) = 5;
  train(1, 0) = 9;
  IsolationAudit audit(held, train);
  CHECK(audit.shared_rows() == 1);
  audit.inspect(train);
  CHECK(audit.violations() == 0);
  audit.inspect(held);
  CHECK(audit.violations() == 1);
}
