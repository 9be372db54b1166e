#pragma once

#include <acoustaxel/braille.hpp>
#include <acoustaxel/dataset.hpp>
#include <acoustaxel/features.hpp>
#include <acoustaxel/harness/config_file.hpp>
#include <acoustaxel/harness/words.hpp>
#include <acoustaxel/learn/grid_search.hpp>
#include <acoustaxel/learn/metrics.hpp>
#include <acoustaxel/learn/model.hpp>
#include <acoustaxel/rng.hpp>
#include <acoustaxel/sim.hpp>
#include <acoustaxel/wav.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acoustaxel::harness {

enum class ExperimentKind { xline, yline, pin1, pin4, letters, reprbench, words };

inline constexpr std::array<ExperimentKind, 7> kAllExperiments = {
    ExperimentKind::xline,   ExperimentKind::yline,     ExperimentKind::pin1, ExperimentKind::pin4,
    ExperimentKind::letters, ExperimentKind::reprbench, ExperimentKind::words};

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::xline: return "XLINE";
    case ExperimentKind::yline: return "YLINE";
    case ExperimentKind::pin1: return "PIN1";
    case ExperimentKind::pin4: return "PIN4";
    case ExperimentKind::letters: return "LETTERS";
    case ExperimentKind::reprbench: return "REPRBENCH";
    case ExperimentKind::words: return "WORDS";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto k : kAllExperiments)
    if (to_string(k) == upper) return k;
  fail(ErrorKind::validation, "unknown experiment '" + std::string(name) +
                                  "' (expected XLINE, YLINE, PIN1, PIN4, LETTERS, REPRBENCH or WORDS)");
}

struct SplitRatio {
  int train = 3;
  int test = 2;

  /// Training share of a class with n samples, rounded to nearest.
  std::size_t train_count(std::size_t n) const {
    const auto total = static_cast<std::size_t>(train + test);
    return (n * static_cast<std::size_t>(train) + total / 2) / total;
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::letters;
  std::size_t samples_per_class = 200;  // line and letter experiments
  std::size_t total_samples = 0;        // pin experiments
  SplitRatio split;
  learn::ModelKind model = learn::ModelKind::svm;
  std::vector<learn::ModelConfig> grid;  // one entry = train it directly
  bool grid_search = false;
  int folds = 5;
  learn::FoldMode fold_mode = learn::FoldMode::stratified;
  features::ReprKind repr = features::ReprKind::smoothed_spectrum;
  std::uint64_t seed = 1;
  int letter_cell = 0;
  std::size_t n_words = 100000;
  double word_error_rate = 0.05;  // synthetic dot-6 confusion when no matrix is supplied

  void validate() const {
    require(split.train > 0 && split.test > 0, ErrorKind::validation, "split ratio parts must be positive");
    require(!grid.empty() || kind == ExperimentKind::words, ErrorKind::validation, "experiment has no model config");
    if (kind == ExperimentKind::pin1 || kind == ExperimentKind::pin4)
      require(total_samples > 0, ErrorKind::config, "total_samples must be positive");
    else if (kind == ExperimentKind::words)
      require(n_words > 0, ErrorKind::config, "n_words must be positive");
    else
      require(samples_per_class > 0, ErrorKind::config, "samples_per_class must be positive");
    require(folds >= 2, ErrorKind::validation, "folds must be >= 2");
  }
};

inline ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::xline:
    case ExperimentKind::yline:
      s.samples_per_class = kind == ExperimentKind::xline ? 200 : 125;
      s.split = {3, 2};
      s.model = learn::ModelKind::knn;
      s.grid = {learn::KnnConfig{5, learn::KnnWeighting::uniform, learn::Task::regress}};
      break;
    case ExperimentKind::pin1:
    case ExperimentKind::pin4:
      s.total_samples = kind == ExperimentKind::pin1 ? 500 : 2000;
      s.split = {2, 1};
      s.model = learn::ModelKind::svm;
      s.grid = learn::default_svm_grid();
      s.grid_search = true;
      s.folds = 3;
      s.fold_mode = learn::FoldMode::interleaved;  // most taxels have only a handful of samples
      break;
    case ExperimentKind::letters:
    case ExperimentKind::reprbench:
      s.samples_per_class = kind == ExperimentKind::letters ? 200 : 40;
      s.split = {3, 2};
      s.model = learn::ModelKind::svm;
      s.grid = learn::default_svm_grid();
      s.grid_search = true;
      break;
    case ExperimentKind::words:
      s.model = learn::ModelKind::svm;
      break;
  }
  return s;
}

/// One labelled contact state to synthesize.
struct PlannedSample {
  braille::ContactPattern pattern;
  SampleLabel label;
  Split split = Split::train;
};

struct DatasetPlan {
  std::string experiment;
  LabelSchema schema = LabelSchema::classification;
  std::vector<std::string> class_names;
  std::vector<PlannedSample> samples;
};

namespace detail {

inline std::string taxel_name(braille::TaxelCoord t) {
  return "c" + std::to_string(t.col) + "r" + std::to_string(t.row);
}

inline std::string mm_name(double mm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fmm", mm);
  return buf;
}

/// Marks the first train_count(n_c) samples of each class (in plan order) as training data.
inline void assign_splits(std::vector<PlannedSample>& samples, const SplitRatio& ratio) {
  std::map<int, std::size_t> per_class, seen;
  for (const auto& s : samples) ++per_class[s.label.class_index];
  for (auto& s : samples) {
    const auto c = s.label.class_index;
    s.split = seen[c]++ < ratio.train_count(per_class[c]) ? Split::train : Split::test;
  }
}

}  // namespace detail

/// Which patterns are synthesized, with labels and split tags. Sample order is
/// class-major for the line and letter experiments and draw order for pins.
inline DatasetPlan plan_dataset(const ExperimentSpec& spec, const braille::DisplayGeometry& geo = {}) {
  spec.validate();
  DatasetPlan plan;
  plan.experiment = std::string(to_string(spec.kind));
  switch (spec.kind) {
    case ExperimentKind::xline:
    case ExperimentKind::yline: {
      const auto axis = spec.kind == ExperimentKind::xline ? braille::Axis::x : braille::Axis::y;
      const int lines = axis == braille::Axis::x ? geo.usable_cols : geo.n_rows;
      plan.schema = LabelSchema::regression_mm;
      for (int i = 0; i < lines; ++i) {
        const auto line = braille::line_pattern(axis, i, geo);
        plan.class_names.push_back(detail::mm_name(line.label_mm));
        for (std::size_t k = 0; k < spec.samples_per_class; ++k)
          plan.samples.push_back({line.pattern, {i, line.label_mm}});
      }
      break;
    }
    case ExperimentKind::pin1:
    case ExperimentKind::pin4: {
      const int patch = spec.kind == ExperimentKind::pin1 ? 1 : 2;
      plan.schema = LabelSchema::taxel_2d;
      for (int code = 0; code < geo.usable_taxels(); ++code)
        plan.class_names.push_back(detail::taxel_name(braille::taxel_from_class(code, geo)));
      const int cols = geo.usable_cols - patch + 1, rows = geo.n_rows - patch + 1;
      Rng draw(derive_seed(spec.seed, 0xD1CE));
      for (std::size_t i = 0; i < spec.total_samples; ++i) {
        const braille::TaxelCoord anchor{static_cast<int>(draw.below(static_cast<std::uint64_t>(cols))),
                                         static_cast<int>(draw.below(static_cast<std::uint64_t>(rows)))};
        braille::ContactPattern p(geo);
        for (int dr = 0; dr < patch; ++dr)
          for (int dc = 0; dc < patch; ++dc) p.set(anchor.row + dr, anchor.col + dc);
        plan.samples.push_back({p, {braille::taxel_class(anchor, geo), 0.0}});
      }
      break;
    }
    case ExperimentKind::letters:
    case ExperimentKind::reprbench: {
      plan.schema = LabelSchema::classification;
      for (const auto& l : braille::alphabet()) {
        plan.class_names.emplace_back(1, l.letter);
        const auto p = braille::letter_to_pattern(l, spec.letter_cell, geo);
        for (std::size_t k = 0; k < spec.samples_per_class; ++k)
          plan.samples.push_back({p, {l.letter - 'a', 0.0}});
      }
      break;
    }
    case ExperimentKind::words: fail(ErrorKind::validation, "WORDS does not synthesize a dataset");
  }
  require(!plan.samples.empty(), ErrorKind::config, "experiment plan has zero samples");
  detail::assign_splits(plan.samples, spec.split);
  return plan;
}

/// Synthesizes every planned sample (sample i uses derive_seed(seed, i)) and
/// extracts one representation.
inline Dataset generate_dataset(const DatasetPlan& plan, const RunConfig& cfg, features::ReprKind repr,
                                std::uint64_t seed) {
  cfg.validate();
  const sim::Simulator simulator(cfg.audio, cfg.sim);
  Dataset ds;
  ds.experiment = plan.experiment;
  ds.schema = plan.schema;
  ds.repr = repr;
  ds.sample_rate_hz = cfg.audio.sample_rate_hz;
  ds.grid_cols = cfg.sim.geometry.usable_cols;
  ds.class_names = plan.class_names;
  ds.master_seed = seed;
  for (std::size_t i = 0; i < plan.samples.size(); ++i) {
    const auto& s = plan.samples[i];
    const auto w = simulator.synthesize(s.pattern, derive_seed(seed, i));
    ds.add(features::extract(w, repr, cfg.features), s.label, s.split, s.pattern.to_bits());
  }
  ds.repr = repr;
  return ds;
}

inline Dataset generate_dataset(const ExperimentSpec& spec, const RunConfig& cfg, features::ReprKind repr) {
  return generate_dataset(plan_dataset(spec, cfg.sim.geometry), cfg, repr, spec.seed);
}

/// Builds a dataset from real recordings: `dir/labels.csv` with header
/// `file,class,value_mm,split` (split is train or test; value_mm may be empty).
inline Dataset ingest_recordings(const std::filesystem::path& dir, features::ReprKind repr,
                                 const features::FeatureConfigs& cfgs, LabelSchema schema) {
  const auto labels_path = dir / "labels.csv";
  std::ifstream in(labels_path);
  if (!in) fail(ErrorKind::io, "cannot open " + labels_path.string());
  Dataset ds;
  ds.experiment = "RECORDINGS";
  ds.schema = schema;
  ds.repr = repr;
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "file,class,value_mm,split", ErrorKind::parse,
          labels_path.string() + ":1: expected header 'file,class,value_mm,split'");
  int max_class = -1;
  for (int number = 2; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = labels_path.string() + ":" + std::to_string(number) + ": ";
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    require(cells.size() == 4, ErrorKind::parse, where + "expected 4 comma-separated fields");
    SampleLabel label;
    try {
      label.class_index = std::stoi(cells[1]);
      label.scalar_mm = cells[2].empty() ? 0.0 : std::stod(cells[2]);
    } catch (const std::exception&) {
      fail(ErrorKind::parse, where + "bad class or value_mm");
    }
    require(label.class_index >= 0, ErrorKind::parse, where + "class must be >= 0");
    require(cells[3] == "train" || cells[3] == "test", ErrorKind::parse, where + "split must be train or test");
    const auto w = signal::load_wav(dir / cells[0]);
    if (ds.size() == 0) ds.sample_rate_hz = w.sample_rate_hz;
    require(w.sample_rate_hz == ds.sample_rate_hz, ErrorKind::validation,
            where + "sample rate differs from the first recording");
    ds.add(features::extract(w, repr, cfgs), label, cells[3] == "train" ? Split::train : Split::test);
    max_class = std::max(max_class, label.class_index);
  }
  require(ds.size() > 0, ErrorKind::validation, labels_path.string() + " lists no recordings");
  for (int c = 0; c <= max_class; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

/// Re-extracts a waveform dataset as another representation.
inline Dataset featurize(const Dataset& waveforms, features::ReprKind repr, const features::FeatureConfigs& cfgs) {
  require(waveforms.repr == features::ReprKind::waveform, ErrorKind::validation,
          "featurize needs a waveform dataset, got " + std::string(features::to_string(waveforms.repr)));
  Dataset out;
  out.experiment = waveforms.experiment;
  out.schema = waveforms.schema;
  out.repr = repr;
  out.sample_rate_hz = waveforms.sample_rate_hz;
  out.grid_cols = waveforms.grid_cols;
  out.class_names = waveforms.class_names;
  out.master_seed = waveforms.master_seed;
  for (std::size_t i = 0; i < waveforms.size(); ++i) {
    const auto row = waveforms.row(i);
    signal::Waveform w{std::vector<double>(row.begin(), row.end()), waveforms.sample_rate_hz};
    out.add(features::extract(w, repr, cfgs), waveforms.labels[i], waveforms.splits[i], waveforms.patterns[i]);
  }
  return out;
}

struct PredictionRecord {
  std::string repr;
  std::size_t sample = 0;  // dataset index
  int true_class = 0;
  int pred_class = 0;
  double true_mm = 0.0;
  double pred_mm = 0.0;
};

struct Evaluation {
  LabelSchema schema = LabelSchema::classification;
  std::vector<PredictionRecord> predictions;
  std::optional<learn::ConfusionMatrix> confusion;
  std::optional<learn::TaxelErrorMap> error_map;
  std::vector<std::pair<std::string, double>> metrics;
};

inline braille::TaxelCoord decode_taxel(int code, int grid_cols) { return {code % grid_cols, code / grid_cols}; }

/// Scores predictions against the schema's metrics.
inline Evaluation score(LabelSchema schema, std::vector<PredictionRecord> preds, const std::vector<std::string>& names,
                        int grid_cols, int grid_rows) {
  Evaluation ev;
  ev.schema = schema;
  ev.predictions = std::move(preds);
  require(!ev.predictions.empty(), ErrorKind::validation, "test split is empty");
  if (schema == LabelSchema::regression_mm) {
    std::vector<double> p, t;
    for (const auto& r : ev.predictions) {
      p.push_back(r.pred_mm);
      t.push_back(r.true_mm);
    }
    ev.metrics.emplace_back("rmse_mm", learn::rmse(p, t));
    return ev;
  }
  learn::ConfusionMatrix cm(names);
  for (const auto& r : ev.predictions) cm.add(r.true_class, r.pred_class);
  ev.metrics.emplace_back("classification_rate", learn::classification_rate(cm));
  if (schema == LabelSchema::taxel_2d) {
    std::vector<braille::TaxelCoord> p, t;
    for (const auto& r : ev.predictions) {
      p.push_back(decode_taxel(r.pred_class, grid_cols));
      t.push_back(decode_taxel(r.true_class, grid_cols));
    }
    const auto rates = learn::per_axis_rate(p, t);
    ev.metrics.emplace_back("x_rate", rates.x_rate);
    ev.metrics.emplace_back("y_rate", rates.y_rate);
    ev.metrics.emplace_back("joint_rate", rates.joint_rate);
    ev.error_map = learn::taxel_error_map(p, t, grid_rows, grid_cols);
    ev.metrics.emplace_back("mean_error_distance_taxels", learn::mean_error_distance(*ev.error_map));
  }
  ev.confusion = std::move(cm);
  return ev;
}

/// Predicts every test-split sample of `ds`.
inline Evaluation evaluate(const learn::SensorModel& model, const Dataset& ds) {
  require(model.schema() == ds.schema, ErrorKind::validation,
          "model was trained for " + std::string(to_string(model.schema())) + " labels, dataset has " +
              std::string(to_string(ds.schema)));
  std::vector<PredictionRecord> preds;
  std::vector<double> x(ds.feature_length);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits[i] != Split::test) continue;
    const auto row = ds.row(i);
    std::copy(row.begin(), row.end(), x.begin());
    const auto p = model.predict(x);
    preds.push_back({std::string(features::to_string(ds.repr)), i, ds.labels[i].class_index, p.class_index,
                     ds.labels[i].scalar_mm, p.value_mm});
  }
  const int rows = ds.grid_cols > 0 ? static_cast<int>((ds.class_names.size() + ds.grid_cols - 1) / ds.grid_cols) : 0;
  return score(ds.schema, std::move(preds), ds.class_names, ds.grid_cols, std::max(rows, 1));
}

struct CvTableRow {
  std::string repr;
  std::string config;
  std::vector<double> fold_scores;
  double mean = 0.0;
  bool rejected = false;
  bool selected = false;
};

struct AccuracyRow {
  std::string repr;
  double accuracy = 0.0;
  std::string config;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::letters;
  LabelSchema schema = LabelSchema::classification;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, double>> context;  // physical-rig reference values, not recomputed
  std::vector<PredictionRecord> predictions;
  std::optional<learn::ConfusionMatrix> confusion;
  std::optional<learn::TaxelErrorMap> error_map;
  std::optional<std::array<std::int64_t, 6>> misread_pins;
  std::vector<CvTableRow> cv;
  std::vector<AccuracyRow> accuracy;
  std::vector<WordRecord> words;
  double wall_time_s = 0.0;
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

struct TrainedRun {
  learn::ModelConfig config;
  learn::SensorModel model;
  std::vector<CvTableRow> cv;
  std::size_t isolation_rows = 0;
  std::size_t isolation_violations = 0;
};

/// Grid search (if asked) and final training, with the test rows audited.
inline TrainedRun train_on(const Dataset& ds, const ExperimentSpec& spec) {
  const auto train = learn::to_training_set(ds, Split::train);
  const auto test = learn::to_training_set(ds, Split::test);
  learn::IsolationAudit audit(test.x, train.x);
  const learn::ScopedAudit guard(audit);
  TrainedRun run;
  run.config = spec.grid.front();
  const std::string repr(features::to_string(ds.repr));
  if (spec.grid_search && spec.grid.size() > 1) {
    const auto gr = learn::grid_search(train, spec.grid, spec.folds, spec.fold_mode);
    run.config = gr.best;
    for (std::size_t r = 0; r < gr.table.size(); ++r) {
      const auto& row = gr.table[r];
      run.cv.push_back({repr, learn::describe(row.config), row.fold_scores, row.mean, row.rejected, r == gr.best_index});
    }
  }
  run.model = learn::SensorModel::train(train, run.config);
  run.isolation_rows = audit.rows_checked();
  run.isolation_violations = audit.violations();
  return run;
}

inline void echo_common(ExperimentReport& rep, const ExperimentSpec& spec, const RunConfig& cfg) {
  auto& e = rep.config_echo;
  e.emplace_back("experiment", std::string(to_string(spec.kind)));
  e.emplace_back("seed", std::to_string(spec.seed));
  e.emplace_back("sim.seed", std::to_string(cfg.sim.seed));
  e.emplace_back("audio.sample_rate_hz", std::to_string(cfg.audio.sample_rate_hz));
  e.emplace_back("audio.sweep", format_real(cfg.audio.sweep_f_start_hz) + "-" + format_real(cfg.audio.sweep_f_end_hz) +
                                    " Hz over " + format_real(cfg.audio.sweep_duration_s) + " s");
  e.emplace_back("stft", std::to_string(cfg.features.stft.window_size) + "/" +
                             std::to_string(cfg.features.stft.hop_size));
  e.emplace_back("sim.snr_db", format_real(cfg.sim.snr_db));
  e.emplace_back("sim.gain_jitter_db", format_real(cfg.sim.gain_jitter_db));
  e.emplace_back("sim.mass_shift_per_pin", format_real(cfg.sim.mass_shift_per_pin));
  e.emplace_back("sim.shared_notches", cfg.sim.notch_assignment_injective() ? "false" : "true");
}

}  // namespace detail

/// Reading simulation for WORDS. With no confusion matrix the synthetic
/// dot-6 confusion at spec.word_error_rate is used.
inline ExperimentReport run_words(const ExperimentSpec& spec, const braille::WordCorpus& corpus,
                                  const std::optional<learn::ConfusionMatrix>& confusion = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  ExperimentReport rep;
  rep.kind = ExperimentKind::words;
  rep.config_echo.emplace_back("experiment", "WORDS");
  rep.config_echo.emplace_back("seed", std::to_string(spec.seed));
  rep.config_echo.emplace_back("n_words", std::to_string(spec.n_words));
  rep.config_echo.emplace_back("corpus_size", std::to_string(corpus.size()));
  rep.config_echo.emplace_back("confusion", confusion ? "supplied" : "dot6 pairs at " + format_real(spec.word_error_rate));
  const auto probs = confusion ? row_normalize(*confusion) : dot6_confusion(spec.word_error_rate);
  auto run = simulate_reading(corpus, probs, spec.n_words, spec.seed);
  const auto& o = run.outcome;
  rep.metrics = {{"n_words", static_cast<double>(o.counts.words)},
                 {"fraction_correct_after_correction", o.fraction_correct_after_correction},
                 {"fraction_misread_to_existing_word", o.fraction_misread_to_existing_word},
                 {"fraction_heuristic_failed", o.fraction_heuristic_failed},
                 {"fraction_corrected_back", o.fraction_corrected_back},
                 {"fraction_correct_without_correction", o.fraction_correct_without_correction}};
  rep.context = {{"reference.rig_fraction_correct", 0.95}, {"reference.rig_fraction_corrected_back", 0.39}};
  rep.misread_pins = misread_pin_histogram(run.letters);
  rep.confusion = std::move(run.letters);
  rep.words = std::move(run.log);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Same waveforms, featurized once per representation, same model grid for each.
inline ExperimentReport compare_representations(const ExperimentSpec& spec, const RunConfig& cfg,
                                                const std::vector<features::ReprKind>& reprs = {
                                                    features::kAllReprKinds.begin(), features::kAllReprKinds.end()}) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.kind = spec.kind;
  detail::echo_common(rep, spec, cfg);
  rep.config_echo.emplace_back("samples_per_class", std::to_string(spec.samples_per_class));
  rep.config_echo.emplace_back("model", std::string(learn::to_string(spec.model)));
  const auto plan = plan_dataset(spec, cfg.sim.geometry);
  rep.schema = plan.schema;
  std::size_t violations = 0;
  for (auto repr : reprs) {
    const std::string name(features::to_string(repr));
    // One representation at a time keeps peak memory to a single feature matrix.
    const auto ds = generate_dataset(plan, cfg, repr, spec.seed);
    auto run = detail::train_on(ds, spec);
    violations += run.isolation_violations;
    auto ev = evaluate(run.model, ds);
    const double acc = ev.metrics.front().second;
    rep.accuracy.push_back({name, acc, learn::describe(run.config)});
    rep.metrics.emplace_back("accuracy." + name, acc);
    rep.predictions.insert(rep.predictions.end(), ev.predictions.begin(), ev.predictions.end());
    rep.cv.insert(rep.cv.end(), run.cv.begin(), run.cv.end());
  }
  rep.metrics.emplace_back("isolation_violations", static_cast<double>(violations));
  rep.context = {{"reference.rig_best_accuracy", 0.90}};
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Generates (or takes) the dataset, trains as the ExperimentSpec asks and evaluates on the
/// held-out split. WORDS goes through run_words instead.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const RunConfig& cfg,
                                       const Dataset* preloaded = nullptr) {
  require(spec.kind != ExperimentKind::words, ErrorKind::validation, "WORDS runs through run_words");
  if (spec.kind == ExperimentKind::reprbench && !preloaded) return compare_representations(spec, cfg);
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  ExperimentReport rep;
  rep.kind = spec.kind;
  detail::echo_common(rep, spec, cfg);

  std::optional<Dataset> generated;
  if (!preloaded) generated = generate_dataset(spec, cfg, spec.repr);
  const Dataset& ds = preloaded ? *preloaded : *generated;
  rep.schema = ds.schema;
  rep.config_echo.emplace_back("representation", std::string(features::to_string(ds.repr)));
  rep.config_echo.emplace_back("samples", std::to_string(ds.size()));
  rep.config_echo.emplace_back("train_samples", std::to_string(ds.count(Split::train)));
  rep.config_echo.emplace_back("test_samples", std::to_string(ds.count(Split::test)));
  rep.config_echo.emplace_back("grid_search", spec.grid_search && spec.grid.size() > 1 ? "true" : "false");

  auto run = detail::train_on(ds, spec);
  rep.config_echo.emplace_back("model", learn::describe(run.config));
  auto ev = evaluate(run.model, ds);
  rep.metrics = ev.metrics;
  rep.metrics.emplace_back("isolation_violations", static_cast<double>(run.isolation_violations));
  rep.predictions = std::move(ev.predictions);
  rep.confusion = std::move(ev.confusion);
  rep.error_map = std::move(ev.error_map);
  rep.cv = std::move(run.cv);

  switch (spec.kind) {
    case ExperimentKind::xline: rep.context = {{"reference.rig_rmse_mm", 1.67}}; break;
    case ExperimentKind::yline: rep.context = {{"reference.rig_rmse_mm", 0.0}}; break;
    case ExperimentKind::pin1:
      rep.context = {{"reference.rig_x_rate", 0.76}, {"reference.rig_y_rate", 0.79},
                     {"reference.rig_mean_error_distance_taxels", 0.80}};
      break;
    case ExperimentKind::pin4:
      rep.context = {{"reference.rig_x_rate", 0.85}, {"reference.rig_y_rate", 0.94},
                     {"reference.rig_mean_error_distance_taxels", 0.39}};
      break;
    case ExperimentKind::letters: rep.context = {{"reference.rig_classification_rate", 0.88}}; break;
    default: break;
  }
  if (rep.confusion && rep.confusion->size() == 26 && ds.schema == LabelSchema::classification)
    rep.misread_pins = misread_pin_histogram(*rep.confusion);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace acoustaxel::harness
