#include <acoustaxel/dataset.hpp>
#include <acoustaxel/harness/checker.hpp>
#include <acoustaxel/harness/config_file.hpp>
#include <acoustaxel/harness/experiment.hpp>
#include <acoustaxel/harness/report.hpp>
#include <acoustaxel/harness/words.hpp>

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace acoustaxel;
using namespace acoustaxel::harness;
using braille::WordCorpus;
using Catch::Matchers::ContainsSubstring;

namespace {

RunConfig parse(const std::string& text, const std::string& source = "cfg") {
  std::istringstream in(text);
  return parse_config(in, source);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("config was accepted: " << text);
  return {};
}

learn::ConfusionMatrix letter_matrix() { return learn::ConfusionMatrix(letter_names()); }

std::size_t count_split(const DatasetPlan& plan, Split s) {
  std::size_t n = 0;
  for (const auto& p : plan.samples) n += p.split == s;
  return n;
}

ExperimentSpec small_spec(ExperimentKind kind, std::size_t n) {
  auto spec = default_spec(kind);
  if (kind == ExperimentKind::pin1 || kind == ExperimentKind::pin4) spec.total_samples = n;
  else spec.samples_per_class = n;
  return spec;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config files set known keys and ignore comments") {
  const auto cfg = parse(
      "# noiseless run\n"
      "sim.snr_db = inf\n"
      "\n"
      "sim.gain_jitter_db = 0   # no re-seating\n"
      "stft.hop_size = 256\n"
      "sim.base_resonances = 500:4:6, 3000:8:3\n");
  CHECK(std::isinf(cfg.sim.snr_db));
  CHECK(cfg.sim.gain_jitter_db == 0.0);
  CHECK(cfg.features.stft.hop_size == 256);
  REQUIRE(cfg.sim.base_resonances.size() == 2);
  CHECK(cfg.sim.base_resonances[1].center_hz == 3000.0);
  CHECK(cfg.sim.mass_shift_per_pin == sim::SimConfig{}.mass_shift_per_pin);
}

TEST_CASE("config errors name the source and line") {
  CHECK_THAT(config_error("sim.snr_db = 20\nsim.bogus = 1\n"), ContainsSubstring("cfg:2:"));
  CHECK_THAT(config_error("sim.snr_db = 20\nsim.bogus = 1\n"), ContainsSubstring("sim.bogus"));
  CHECK_THAT(config_error("\n\nsim.snr_db 20\n"), ContainsSubstring("cfg:3:"));
  CHECK_THAT(config_error("sim.snr_db = 20\nsim.snr_db = 30\n"), ContainsSubstring("cfg:2: duplicate"));
  CHECK_THAT(config_error("stft.window_size = big\n"), ContainsSubstring("cfg:1: bad value 'big'"));
  CHECK_THAT(config_error("sim.snr_db =\n"), ContainsSubstring("cfg:1: missing value"));
  CHECK_THAT(config_error("sim.allow_shared_notches = maybe\n"), ContainsSubstring("cfg:1:"));
  // Values that parse but break an invariant are reported against the source.
  CHECK_THAT(config_error("stft.hop_size = 4096\n"), ContainsSubstring("cfg: "));
  CHECK_THAT(config_error("sim.notch_col_step_hz = 0\nsim.notch_row_step_hz = 0\n"), ContainsSubstring("cfg: "));

  testing::TempDir dir("config");
  CHECK(testing::kind_of_failure([&] { load_config(dir / "absent.cfg"); }) == ErrorKind::io);
  {
    std::ofstream(dir / "run.cfg") << "sim.snr_db = 12.5\nsim.seed = 4\n";
  }
  const auto cfg = load_config(dir / "run.cfg");
  CHECK(cfg.sim.snr_db == 12.5);
  CHECK(cfg.sim.seed == 4);
  CHECK(config_keys().size() >= 20);
}

TEST_CASE("identity letter probabilities read every word correctly") {
  const auto corpus = WordCorpus::load(std::filesystem::path(ACOUSTAXEL_SOURCE_DIR) / "data" / "corpus.txt");
  const auto run = simulate_reading(corpus, braille::identity_probabilities(), 2000, 3);
  CHECK(run.outcome.fraction_correct_after_correction == 1.0);
  CHECK(run.outcome.fraction_correct_without_correction == 1.0);
  CHECK(run.outcome.counts.misread == 0);
  CHECK(run.outcome.fraction_corrected_back == 0.0);
  CHECK(run.letters.total() == run.letters.trace());
}

TEST_CASE("a misread that lands on another corpus word cannot be corrected") {
  const WordCorpus corpus({"lane", "vane"});
  auto p = braille::identity_probabilities();
  p['l' - 'a'] = {};
  p['l' - 'a']['v' - 'a'] = 1.0;
  const auto run = simulate_reading(corpus, p, 500, 7);
  std::size_t lane = 0;
  for (const auto& r : run.log) {
    CHECK(r.read == "vane");
    CHECK(r.corrected == "vane");
    if (r.word == "lane") {
      ++lane;
      CHECK(r.outcome == WordOutcome::misread_existing);
    } else {
      CHECK(r.outcome == WordOutcome::correct);
    }
  }
  CHECK(lane > 0);
  CHECK(lane < 500);
  CHECK(run.outcome.counts.misread_existing == lane);
  CHECK(run.outcome.counts.correct == 500 - lane);
  CHECK(run.outcome.counts.failed == 0);
  CHECK(run.outcome.counts.corrected_back == 0);
  CHECK(run.letters.at('l' - 'a', 'v' - 'a') == static_cast<std::int64_t>(lane));
}

TEST_CASE("correction recovers misreads that leave the corpus") {
  const WordCorpus corpus({"lamp", "desk", "note"});
  auto p = braille::identity_probabilities();
  p['l' - 'a'] = {};
  p['l' - 'a']['v' - 'a'] = 1.0;  // "vamp" is not a corpus word
  const auto run = simulate_reading(corpus, p, 300, 11);
  const auto& c = run.outcome.counts;
  CHECK(run.outcome.fraction_correct_after_correction == 1.0);
  CHECK(c.corrected_back == c.misread);
  CHECK(c.misread > 0);
  CHECK(run.outcome.fraction_corrected_back == 1.0);
  CHECK(run.outcome.fraction_correct_without_correction < 1.0);
}

TEST_CASE("reading outcomes partition the draws and are seed-deterministic") {
  const auto corpus = WordCorpus::load(std::filesystem::path(ACOUSTAXEL_SOURCE_DIR) / "data" / "corpus.txt");
  const auto p = dot6_confusion(0.2);
  const auto a = simulate_reading(corpus, p, 3000, 5), b = simulate_reading(corpus, p, 3000, 5);
  CHECK(a.outcome.counts == b.outcome.counts);
  const auto& c = a.outcome.counts;
  CHECK(c.correct + c.misread_existing + c.failed == c.words);
  CHECK(c.read_exact + c.misread == c.words);
  CHECK(a.outcome.fraction_correct_after_correction > a.outcome.fraction_correct_without_correction);
  const auto recount = tally(a.log);
  CHECK(recount == c);
  CHECK(testing::kind_of_failure([] { dot6_confusion(1.5); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([&] { simulate_reading(WordCorpus({"a"}), p, 0, 1); }) == ErrorKind::validation);
}

TEST_CASE("misread pin histogram") {
  auto cm = letter_matrix();
  cm.add('l' - 'a', 'v' - 'a', 7);
  for (int i = 0; i < 26; ++i) cm.add(i, i, 100);  // correct reads add nothing
  auto h = misread_pin_histogram(cm);
  CHECK(h == std::array<std::int64_t, 6>{0, 0, 0, 0, 0, 7});

  auto pair = letter_matrix();
  pair.add('m' - 'a', 'x' - 'a', 3);
  pair.add('x' - 'a', 'm' - 'a', 2);
  CHECK(misread_pin_histogram(pair)[5] == 5);

  auto diag = letter_matrix();
  for (int i = 0; i < 26; ++i) diag.add(i, i, 9);
  CHECK(misread_pin_histogram(diag) == std::array<std::int64_t, 6>{});

  // a (dot 1) read as c (dots 1, 4) blames dot 4 only; a read as b blames dot 2.
  auto ac = letter_matrix();
  ac.add(0, 2, 4);
  ac.add(0, 1, 1);
  CHECK(misread_pin_histogram(ac) == std::array<std::int64_t, 6>{0, 1, 0, 4, 0, 0});

  CHECK(testing::kind_of_failure([] { misread_pin_histogram(learn::ConfusionMatrix({"a", "b"})); }) ==
        ErrorKind::validation);
}

TEST_CASE("experiment plans have the documented sizes and splits") {
  const auto xline = plan_dataset(default_spec(ExperimentKind::xline));
  CHECK(xline.samples.size() == 5800);
  CHECK(count_split(xline, Split::train) == 3480);
  CHECK(count_split(xline, Split::test) == 2320);
  CHECK(xline.class_names.size() == 29);
  CHECK(xline.schema == LabelSchema::regression_mm);

  const auto yline = plan_dataset(default_spec(ExperimentKind::yline));
  CHECK(yline.samples.size() == 500);
  CHECK(count_split(yline, Split::test) == 200);

  const auto letters = plan_dataset(default_spec(ExperimentKind::letters));
  CHECK(letters.samples.size() == 5200);
  CHECK(count_split(letters, Split::train) == 3120);
  CHECK(count_split(letters, Split::test) == 2080);
  std::map<int, std::pair<int, int>> per_class;
  for (const auto& s : letters.samples) (s.split == Split::train ? per_class[s.label.class_index].first
                                                                   : per_class[s.label.class_index].second)++;
  CHECK(per_class.size() == 26);
  for (const auto& [c, n] : per_class) {
    CHECK(n.first == 120);
    CHECK(n.second == 80);
  }

  const auto pin1 = plan_dataset(default_spec(ExperimentKind::pin1));
  CHECK(pin1.samples.size() == 500);
  const double test_share = static_cast<double>(count_split(pin1, Split::test)) / 500.0;
  INFO("PIN1 test share " << test_share);
  CHECK(std::abs(test_share - 1.0 / 3.0) < 0.05);
  for (const auto& s : pin1.samples) CHECK(s.pattern.active_count() == 1);

  const auto pin4 = plan_dataset(default_spec(ExperimentKind::pin4));
  CHECK(pin4.samples.size() == 2000);
  for (const auto& s : pin4.samples) {
    CHECK(s.pattern.active_count() == 4);
    const auto anchor = braille::taxel_from_class(s.label.class_index, {});
    CHECK(s.pattern.at(anchor.row, anchor.col));
    CHECK(s.pattern.at(anchor.row + 1, anchor.col + 1));
  }

  CHECK(testing::kind_of_failure([] { plan_dataset(default_spec(ExperimentKind::words)); }) == ErrorKind::validation);
  CHECK(testing::kind_of_failure([] { plan_dataset(small_spec(ExperimentKind::letters, 0)); }) == ErrorKind::config);
}

TEST_CASE("split tags follow the ratio in every class") {
  for (std::size_t n : {1u, 2u, 3u, 7u, 10u}) {
    const auto plan = plan_dataset(small_spec(ExperimentKind::letters, n));
    const SplitRatio ratio{3, 2};
    CHECK(count_split(plan, Split::train) == 26 * ratio.train_count(n));
  }
}

TEST_CASE("dataset generation is reproducible and round-trips through disk") {
  testing::TempDir dir("dataset");
  const auto spec = small_spec(ExperimentKind::letters, 2);
  const RunConfig cfg;
  const auto a = generate_dataset(spec, cfg, features::ReprKind::smoothed_spectrum);
  const auto b = generate_dataset(spec, cfg, features::ReprKind::smoothed_spectrum);
  CHECK(a == b);
  CHECK(a.size() == 52);

  auto other = spec;
  other.seed = 2;
  CHECK_FALSE(generate_dataset(other, cfg, features::ReprKind::smoothed_spectrum) == a);

  save_dataset(a, dir / "ds");
  const auto back = load_dataset(dir / "ds");
  CHECK(back == a);
  REQUIRE(back.features.size() == a.features.size());
  CHECK(std::memcmp(back.features.data(), a.features.data(), a.features.size() * sizeof(a.features[0])) == 0);
}

TEST_CASE("waveform datasets featurize to the same result as direct generation") {
  const auto spec = small_spec(ExperimentKind::yline, 2);
  const RunConfig cfg;
  const auto raw = generate_dataset(spec, cfg, features::ReprKind::waveform);
  const auto direct = generate_dataset(spec, cfg, features::ReprKind::mfcc);
  const auto via = featurize(raw, features::ReprKind::mfcc, cfg.features);
  REQUIRE(via.size() == direct.size());
  for (std::size_t i = 0; i < via.features.size(); ++i)
    REQUIRE(std::abs(via.features[i] - direct.features[i]) <= 1e-5f * std::max(1.0f, std::abs(direct.features[i])));
  CHECK(via.labels == direct.labels);
  CHECK(via.splits == direct.splits);
}

TEST_CASE("small noiseless letter run reads every letter and passes the checker") {
  testing::TempDir dir("letters");
  auto spec = small_spec(ExperimentKind::letters, 5);
  learn::SvmConfig lin;
  lin.kernel = learn::KernelKind::linear;
  spec.grid = {lin};
  spec.grid_search = false;
  RunConfig cfg;
  cfg.sim = sim::SimConfig::noiseless();
  const auto rep = run_experiment(spec, cfg);
  REQUIRE(rep.confusion);
  CHECK(classification_rate(*rep.confusion) == 1.0);
  REQUIRE(rep.misread_pins);
  CHECK(*rep.misread_pins == std::array<std::int64_t, 6>{});

  write_report(rep, dir.path());
  const auto check = check_report(dir.path());
  CHECK(check.ok());
  CHECK(check.problems.empty());
  CHECK(read_confusion(dir / "confusion.csv").trace() == rep.confusion->trace());
  const auto kv = checker::read_report(dir / "report.txt");
  CHECK(kv.at("metric.isolation_violations") == "0");
  CHECK(kv.at("context.reference.rig_classification_rate") == "0.88");
}

TEST_CASE("the checker catches tampered artifacts") {
  testing::TempDir dir("tamper");
  auto spec = small_spec(ExperimentKind::letters, 3);
  learn::KnnConfig knn;
  knn.k = 1;
  spec.grid = {knn};
  spec.model = learn::ModelKind::knn;
  const auto rep = run_experiment(spec, RunConfig{});
  write_report(rep, dir.path());
  REQUIRE(check_report(dir.path()).ok());

  // Flip one prediction without touching report.txt.
  auto text = slurp(dir / "predictions.csv");
  std::istringstream lines(text);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  const auto cols = checker::split_csv(header);
  auto cells = checker::split_csv(first);
  const auto pc = std::find(cols.begin(), cols.end(), "pred_class") - cols.begin();
  const auto tc = std::find(cols.begin(), cols.end(), "true_class") - cols.begin();
  cells[static_cast<std::size_t>(pc)] = cells[static_cast<std::size_t>(tc)] == "0" ? "1" : "0";
  std::string joined;
  for (std::size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
  text.replace(header.size() + 1, first.size(), joined);
  {
    std::ofstream(dir / "predictions.csv", std::ios::binary) << text;
  }
  const auto res = check_report(dir.path());
  CHECK_FALSE(res.ok());
}

TEST_CASE("regression and pin runs pass the checker") {
  testing::TempDir dir("runs");
  auto xline = small_spec(ExperimentKind::xline, 5);
  const auto xrep = run_experiment(xline, RunConfig{});
  write_report(xrep, dir / "xline");
  const auto xcheck = check_report(dir / "xline");
  CHECK(xcheck.ok());
  CHECK(xrep.schema == LabelSchema::regression_mm);

  auto pin = small_spec(ExperimentKind::pin1, 90);
  learn::SvmConfig lin;
  lin.kernel = learn::KernelKind::linear;
  pin.grid = {lin};
  pin.grid_search = false;
  const auto prep = run_experiment(pin, RunConfig{});
  REQUIRE(prep.error_map);
  write_report(prep, dir / "pin");
  const auto pcheck = check_report(dir / "pin");
  for (const auto& p : pcheck.problems) UNSCOPED_INFO(p);
  CHECK(pcheck.ok());
  CHECK(std::filesystem::exists(dir / "pin" / "taxel_error.csv"));
}

TEST_CASE("word runs pass the checker and reject WORDS through run_experiment") {
  testing::TempDir dir("words");
  const auto corpus = WordCorpus::load(std::filesystem::path(ACOUSTAXEL_SOURCE_DIR) / "data" / "corpus.txt");
  auto spec = default_spec(ExperimentKind::words);
  spec.n_words = 1000;
  const auto rep = run_words(spec, corpus);
  write_report(rep, dir.path());
  CHECK(check_report(dir.path()).ok());
  CHECK(testing::kind_of_failure([&] { run_experiment(spec, RunConfig{}); }) == ErrorKind::validation);

  // A supplied confusion matrix is normalized per row.
  auto cm = letter_matrix();
  for (int i = 0; i < 26; ++i) cm.add(i, i, 10);
  const auto ident = run_words(spec, corpus, cm);
  CHECK(ident.metrics[1].first == "fraction_correct_after_correction");
  CHECK(ident.metrics[1].second == 1.0);
}

TEST_CASE("experiment names round-trip") {
  for (auto k : kAllExperiments) CHECK(parse_experiment_kind(to_string(k)) == k);
  CHECK(testing::kind_of_failure([] { parse_experiment_kind("SPEECH"); }) == ErrorKind::validation);
}
