// Command-line front end: synthesize datasets, featurize, train, evaluate
// and run the experiments end to end.

#include <acoustaxel/harness/checker.hpp>
#include <acoustaxel/harness/config_file.hpp>
#include <acoustaxel/harness/experiment.hpp>
#include <acoustaxel/harness/report.hpp>
#include <acoustaxel/learn/model.hpp>
#include <acoustaxel/wav.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#ifndef ACOUSTAXEL_DEFAULT_CORPUS
#define ACOUSTAXEL_DEFAULT_CORPUS "data/corpus.txt"
#endif

namespace ax = acoustaxel;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string repr;
  std::string model;
  std::string config;
  std::string out = "out";
  std::string corpus = ACOUSTAXEL_DEFAULT_CORPUS;
};

struct ModelFlags {
  int k = 0;
  std::string weighting;
  std::string kernel;
  double c = 0.0;
  double gamma = 0.0;
  bool grid = false;
  bool no_grid = false;
  int folds = 0;
};

ax::harness::RunConfig run_config(const Globals& g) {
  if (g.config.empty()) return {};
  return ax::harness::load_config(g.config);
}

/// One configuration from the explicit flags, or the default grid when `grid` is set.
std::vector<ax::learn::ModelConfig> model_grid(const ModelFlags& f, ax::learn::ModelKind kind, ax::learn::Task task,
                                               bool grid) {
  using namespace ax::learn;
  switch (kind) {
    case ModelKind::knn: {
      KnnWeighting w = KnnWeighting::uniform;
      if (f.weighting == "inverse_distance") w = KnnWeighting::inverse_distance;
      else ax::require(f.weighting.empty() || f.weighting == "uniform", ax::ErrorKind::validation,
                   "--weighting must be uniform or inverse_distance");
      if (f.k > 0 || !grid) return {KnnConfig{f.k > 0 ? f.k : 5, w, task}};
      auto out = default_knn_grid();
      for (auto& c : out) {
        std::get<KnnConfig>(c).task = task;
        std::get<KnnConfig>(c).weighting = w;
      }
      return out;
    }
    case ModelKind::svm: {
      ax::require(f.kernel.empty() || f.kernel == "linear" || f.kernel == "rbf", ax::ErrorKind::validation,
              "--kernel must be linear or rbf");
      if (f.c > 0.0 || f.gamma > 0.0 || !f.kernel.empty() || !grid) {
        SvmConfig s;
        if (f.kernel == "linear") s.kernel = KernelKind::linear;
        if (f.c > 0.0) s.c = f.c;
        if (f.gamma > 0.0) s.gamma = f.gamma;
        return {s};
      }
      return default_svm_grid();
    }
    case ModelKind::mlp: return {MlpConfig{}};
  }
  return {};
}

void print_report_summary(const ax::harness::ExperimentReport& rep, const fs::path& dir) {
  std::cout << ax::harness::to_string(rep.kind) << " -> " << dir.string() << '\n';
  for (const auto& [k, v] : rep.metrics) std::cout << "  " << k << " = " << ax::harness::format_real(v) << '\n';
  for (const auto& [k, v] : rep.context) std::cout << "  (" << k << " = " << ax::harness::format_real(v) << ")\n";
  std::printf("  wall_time_s = %.2f\n", rep.wall_time_s);
}

int run(int argc, char** argv) {
  CLI::App app{"acoustaxel: acoustic tactile sensing toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed for sampling and noise");
  app.add_option("--repr", g.repr, "Representation: waveform, spectrum, smoothed_spectrum, spectrogram, "
                                   "mel_spectrogram, mfcc");
  app.add_option("--model", g.model, "Model kind: knn, svm, mlp");
  app.add_option("--config", g.config, "key = value config file (audio., stft., mel., sim. keys)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--corpus", g.corpus, "Word list, one lowercase word per line, most frequent first");
  app.fallthrough();

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a dataset, or one recording to a WAV file");
  std::string synth_xp = "LETTERS", synth_pattern, synth_wav;
  std::size_t synth_samples = 0;
  char synth_letter = 0;
  synth->add_option("--experiment", synth_xp, "Dataset layout: XLINE, YLINE, PIN1, PIN4, LETTERS");
  synth->add_option("--samples", synth_samples, "Samples per class (or total for PIN1/PIN4)");
  synth->add_option("--pattern", synth_pattern, "Pin bits, row-major 0/1 string, for a single recording");
  synth->add_option("--letter", synth_letter, "Braille letter shown in cell 0, for a single recording");
  synth->add_option("--wav", synth_wav, "Write the single recording here (16-bit PCM)");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Waveform dataset or WAV recordings -> representation dataset");
  std::string feat_in, feat_schema = "classification";
  featurize->add_option("--in", feat_in, "Waveform dataset directory, or a directory with labels.csv")->required();
  featurize->add_option("--schema", feat_schema, "Label schema for recordings: classification, regression_mm, taxel_2d");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset's training split");
  std::string train_in;
  ModelFlags mf;
  train->add_option("--in", train_in, "Dataset directory")->required();
  train->add_option("--k", mf.k, "KNN neighbours (odd)");
  train->add_option("--weighting", mf.weighting, "KNN weighting: uniform or inverse_distance");
  train->add_option("--kernel", mf.kernel, "SVM kernel: linear or rbf");
  train->add_option("--c", mf.c, "SVM soft-margin constant");
  train->add_option("--gamma", mf.gamma, "SVM rbf width");
  train->add_flag("--grid", mf.grid, "Grid search over the default grid with cross-validation");
  train->add_option("--folds", mf.folds, "Cross-validation folds (default 5)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a dataset's test split");
  std::string eval_in, eval_model;
  eval->add_option("--in", eval_in, "Dataset directory")->required();
  eval->add_option("--model-file", eval_model, "Model file written by train")->required();

  // xp
  auto* xp = app.add_subcommand("xp", "Run an experiment end to end");
  std::string xp_kind, xp_confusion, xp_dataset;
  std::size_t xp_samples = 0, xp_words = 0;
  double xp_error_rate = -1.0;
  ModelFlags xf;
  xp->add_option("kind", xp_kind, "XLINE, YLINE, PIN1, PIN4, LETTERS, REPRBENCH or WORDS")->required();
  xp->add_option("--samples", xp_samples, "Samples per class (or total for PIN1/PIN4)");
  xp->add_option("--words", xp_words, "Word draws for WORDS");
  xp->add_option("--confusion", xp_confusion, "Letter confusion.csv for WORDS (default: synthetic dot-6 pairs)");
  xp->add_option("--error-rate", xp_error_rate, "Per-letter error rate of the synthetic WORDS confusion");
  xp->add_option("--dataset", xp_dataset, "Use this dataset directory instead of synthesizing");
  xp->add_option("--k", xf.k, "KNN neighbours (odd)");
  xp->add_option("--weighting", xf.weighting, "KNN weighting: uniform or inverse_distance");
  xp->add_option("--kernel", xf.kernel, "SVM kernel: linear or rbf");
  xp->add_option("--c", xf.c, "SVM soft-margin constant");
  xp->add_option("--gamma", xf.gamma, "SVM rbf width");
  xp->add_flag("--grid", xf.grid, "Force grid search");
  xp->add_flag("--no-grid", xf.no_grid, "Disable grid search");
  xp->add_option("--folds", xf.folds, "Cross-validation folds");

  // report
  auto* report = app.add_subcommand("report", "Recompute an output directory's metrics from its CSV files");
  std::string report_in;
  report->add_option("--in", report_in, "Directory holding report.txt and its CSV artifacts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const auto cfg = run_config(g);
  const fs::path out = g.out;

  if (*synth) {
    if (!synth_pattern.empty() || synth_letter) {
      ax::require(!synth_wav.empty(), ax::ErrorKind::validation, "--wav is required for a single recording");
      const auto pattern = synth_letter ? ax::braille::letter_to_pattern(ax::braille::letter(synth_letter), 0,
                                                                          cfg.sim.geometry)
                                        : ax::braille::ContactPattern::from_bits(synth_pattern, cfg.sim.geometry);
      const auto w = ax::sim::synthesize(pattern, cfg.audio, cfg.sim, g.seed);
      ax::signal::write_wav(w, synth_wav);
      std::cout << "wrote " << synth_wav << " (" << w.size() << " samples)\n";
      return 0;
    }
    auto spec = ax::harness::default_spec(ax::harness::parse_experiment_kind(synth_xp));
    spec.seed = g.seed;
    if (synth_samples && spec.total_samples) spec.total_samples = synth_samples;
    else if (synth_samples) spec.samples_per_class = synth_samples;
    const auto repr = g.repr.empty() ? ax::features::ReprKind::waveform : ax::features::parse_repr_kind(g.repr);
    const auto ds = ax::harness::generate_dataset(spec, cfg, repr);
    ax::save_dataset(ds, out);
    std::cout << "wrote " << ds.size() << " samples (" << ds.count(ax::Split::train) << " train) to " << out.string()
              << '\n';
    return 0;
  }

  if (*featurize) {
    const auto repr = g.repr.empty() ? ax::features::ReprKind::smoothed_spectrum : ax::features::parse_repr_kind(g.repr);
    const bool recordings = fs::exists(fs::path(feat_in) / "labels.csv");
    const auto ds = recordings ? ax::harness::ingest_recordings(feat_in, repr, cfg.features,
                                                                ax::parse_label_schema(feat_schema))
                               : ax::harness::featurize(ax::load_dataset(feat_in), repr, cfg.features);
    ax::save_dataset(ds, out);
    std::cout << "wrote " << ds.size() << " " << ax::features::to_string(repr) << " samples to " << out.string()
              << '\n';
    return 0;
  }

  if (*train) {
    const auto ds = ax::load_dataset(train_in);
    const auto set = ax::learn::to_training_set(ds, ax::Split::train);
    const auto kind = g.model.empty() ? (set.task() == ax::learn::Task::regress ? ax::learn::ModelKind::knn
                                                                                 : ax::learn::ModelKind::svm)
                                      : ax::learn::parse_model_kind(g.model);
    const auto grid = model_grid(mf, kind, set.task(), mf.grid);
    ax::harness::ExperimentSpec spec;
    spec.grid = grid;
    spec.grid_search = mf.grid;
    spec.folds = mf.folds > 0 ? mf.folds : 5;
    spec.fold_mode = ds.schema == ax::LabelSchema::taxel_2d ? ax::learn::FoldMode::interleaved
                                                             : ax::learn::FoldMode::stratified;
    const auto run = ax::harness::detail::train_on(ds, spec);
    fs::create_directories(out);
    ax::learn::save_model(run.model, out / "model.bin");
    if (!run.cv.empty()) {
      ax::harness::ExperimentReport rep;
      rep.config_echo = {{"experiment", "TRAIN"}, {"dataset", train_in}, {"model", ax::learn::describe(run.config)}};
      rep.cv = run.cv;
      ax::harness::write_report(rep, out);
    }
    std::cout << "trained " << ax::learn::describe(run.config) << " -> " << (out / "model.bin").string() << '\n';
    return 0;
  }

  if (*eval) {
    const auto ds = ax::load_dataset(eval_in);
    const auto model = ax::learn::load_model(eval_model);
    auto ev = ax::harness::evaluate(model, ds);
    ax::harness::ExperimentReport rep;
    rep.schema = ds.schema;
    rep.config_echo = {{"experiment", "EVAL"}, {"dataset", eval_in}, {"model_file", eval_model}};
    rep.metrics = ev.metrics;
    rep.predictions = std::move(ev.predictions);
    rep.confusion = std::move(ev.confusion);
    rep.error_map = std::move(ev.error_map);
    ax::harness::write_report(rep, out, ds.grid_cols);
    print_report_summary(rep, out);
    return 0;
  }

  if (*xp) {
    const auto kind = ax::harness::parse_experiment_kind(xp_kind);
    auto spec = ax::harness::default_spec(kind);
    spec.seed = g.seed;
    if (xp_samples) {
      if (kind == ax::harness::ExperimentKind::pin1 || kind == ax::harness::ExperimentKind::pin4)
        spec.total_samples = xp_samples;
      else
        spec.samples_per_class = xp_samples;
    }
    if (kind == ax::harness::ExperimentKind::words) {
      if (xp_words) spec.n_words = xp_words;
      if (xp_error_rate >= 0.0) spec.word_error_rate = xp_error_rate;
      const auto corpus = ax::braille::WordCorpus::load(g.corpus);
      std::optional<ax::learn::ConfusionMatrix> cm;
      if (!xp_confusion.empty()) cm = ax::harness::read_confusion(xp_confusion);
      const auto rep = ax::harness::run_words(spec, corpus, cm);
      ax::harness::write_report(rep, out);
      print_report_summary(rep, out);
      return 0;
    }
    if (!g.repr.empty()) spec.repr = ax::features::parse_repr_kind(g.repr);
    const auto task = kind == ax::harness::ExperimentKind::xline || kind == ax::harness::ExperimentKind::yline
                          ? ax::learn::Task::regress
                          : ax::learn::Task::classify;
    const bool custom = !g.model.empty() || xf.k > 0 || xf.c > 0.0 || xf.gamma > 0.0 || !xf.kernel.empty() ||
                        !xf.weighting.empty() || xf.grid || xf.no_grid;
    if (custom) {
      if (!g.model.empty()) spec.model = ax::learn::parse_model_kind(g.model);
      spec.grid = model_grid(xf, spec.model, task, xf.grid || (spec.grid_search && !xf.no_grid));
      spec.grid_search = spec.grid.size() > 1;
    }
    if (xf.folds > 0) spec.folds = xf.folds;
    std::optional<ax::Dataset> pre;
    if (!xp_dataset.empty()) pre = ax::load_dataset(xp_dataset);
    const auto rep = ax::harness::run_experiment(spec, cfg, pre ? &*pre : nullptr);
    ax::harness::write_report(rep, out, cfg.sim.geometry.usable_cols);
    print_report_summary(rep, out);
    return 0;
  }

  if (*report) {
    const auto res = ax::harness::check_report(report_in);
    for (const auto& l : res.lines)
      std::printf("%-40s reported %-24s recomputed %-24s %s\n", l.name.c_str(),
                  ax::harness::format_real(l.reported).c_str(), ax::harness::format_real(l.recomputed).c_str(),
                  l.ok ? "ok" : "MISMATCH");
    for (const auto& p : res.problems) std::printf("problem: %s\n", p.c_str());
    std::printf("%s\n", res.ok() ? "all metrics reproduced" : "report does not match its artifacts");
    return res.ok() ? 0 : 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ax::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ax::ErrorKind::io ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
