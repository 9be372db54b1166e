#pragma once

#include <acoustaxel/braille.hpp>
#include <acoustaxel/learn/metrics.hpp>
#include <acoustaxel/rng.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace acoustaxel::harness {

enum class WordOutcome : std::uint8_t { correct, misread_existing, failed };

inline std::string_view to_string(WordOutcome o) {
  switch (o) {
    case WordOutcome::correct: return "correct";
    case WordOutcome::misread_existing: return "misread_existing";
    case WordOutcome::failed: return "failed";
  }
  return "?";
}

struct WordRecord {
  std::string word;       // drawn from the corpus
  std::string read;       // after letter confusion
  std::string corrected;  // after the Hamming corrector
  WordOutcome outcome = WordOutcome::correct;
};

struct WordCounts {
  std::size_t words = 0;
  std::size_t read_exact = 0;  // no letter was misread
  std::size_t correct = 0;     // correct after correction
  std::size_t misread_existing = 0;
  std::size_t failed = 0;
  std::size_t misread = 0;            // read != word
  std::size_t corrected_back = 0;     // misread, then restored by the corrector

  friend bool operator==(const WordCounts&, const WordCounts&) = default;
};

struct WordReadingOutcome {
  WordCounts counts;
  double fraction_correct_after_correction = 0.0;
  double fraction_misread_to_existing_word = 0.0;
  double fraction_heuristic_failed = 0.0;
  double fraction_corrected_back = 0.0;  // share of misread words the corrector restored
  double fraction_correct_without_correction = 0.0;
};

inline WordOutcome classify_word(const WordRecord& r, const braille::WordCorpus& corpus) {
  if (r.corrected == r.word) return WordOutcome::correct;
  if (r.read != r.word && corpus.contains(r.read)) return WordOutcome::misread_existing;
  return WordOutcome::failed;
}

inline WordCounts tally(const std::vector<WordRecord>& log) {
  WordCounts c;
  for (const auto& r : log) {
    ++c.words;
    c.read_exact += r.read == r.word;
    c.misread += r.read != r.word;
    c.corrected_back += r.read != r.word && r.corrected == r.word;
    switch (r.outcome) {
      case WordOutcome::correct: ++c.correct; break;
      case WordOutcome::misread_existing: ++c.misread_existing; break;
      case WordOutcome::failed: ++c.failed; break;
    }
  }
  return c;
}

inline WordReadingOutcome outcome_from_counts(const WordCounts& c) {
  WordReadingOutcome o;
  o.counts = c;
  if (c.words == 0) return o;
  const auto n = static_cast<double>(c.words);
  o.fraction_correct_after_correction = static_cast<double>(c.correct) / n;
  o.fraction_misread_to_existing_word = static_cast<double>(c.misread_existing) / n;
  o.fraction_heuristic_failed = static_cast<double>(c.failed) / n;
  o.fraction_correct_without_correction = static_cast<double>(c.read_exact) / n;
  o.fraction_corrected_back = c.misread ? static_cast<double>(c.corrected_back) / static_cast<double>(c.misread) : 0.0;
  return o;
}

/// Turns a 26-class count matrix into per-row probabilities. Rows with no
/// samples read the shown letter back unchanged.
inline braille::LetterProbabilities row_normalize(const learn::ConfusionMatrix& cm) {
  require(cm.size() == 26, ErrorKind::validation,
          "letter confusion matrix must be 26 x 26, got " + std::to_string(cm.size()));
  braille::LetterProbabilities p{};
  for (std::size_t i = 0; i < 26; ++i) {
    const auto total = cm.row_sum(i);
    if (total == 0) {
      p[i][i] = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < 26; ++j) p[i][j] = static_cast<double>(cm.at(i, j)) / static_cast<double>(total);
  }
  return p;
}

/// Letters that differ from a partner only in dot 6 misread as that partner
/// with probability `rate`; every other letter reads correctly.
inline braille::LetterProbabilities dot6_confusion(double rate) {
  require(rate >= 0.0 && rate <= 1.0, ErrorKind::validation, "error rate must lie in [0, 1]");
  auto p = braille::identity_probabilities();
  for (auto [a, b] : {std::pair{'l', 'v'}, {'m', 'x'}, {'n', 'y'}, {'o', 'z'}}) {
    const auto i = static_cast<std::size_t>(a - 'a'), j = static_cast<std::size_t>(b - 'a');
    p[i][i] = 1.0 - rate;
    p[i][j] = rate;
    p[j][j] = 1.0 - rate;
    p[j][i] = rate;
  }
  return p;
}

struct ReadingRun {
  WordReadingOutcome outcome;
  std::vector<WordRecord> log;
  learn::ConfusionMatrix letters{std::vector<std::string>{}};  // shown vs read letter counts
};

inline std::vector<std::string> letter_names() {
  std::vector<std::string> out;
  for (char c = 'a'; c <= 'z'; ++c) out.emplace_back(1, c);
  return out;
}

inline ReadingRun simulate_reading(const braille::WordCorpus& corpus, const braille::LetterProbabilities& p,
                                   std::size_t n_words, std::uint64_t seed) {
  require(corpus.size() > 0, ErrorKind::validation, "word corpus is empty");
  require(n_words > 0, ErrorKind::validation, "n_words must be positive");
  braille::validate_probabilities(p);
  Rng rng(seed);
  ReadingRun run;
  run.letters = learn::ConfusionMatrix(letter_names());
  run.log.reserve(n_words);
  for (std::size_t i = 0; i < n_words; ++i) {
    WordRecord r;
    r.word = corpus.words()[rng.below(corpus.size())];
    r.read = braille::perturb_word(r.word, p, rng);
    r.corrected = braille::correct_word(r.read, corpus);
    r.outcome = classify_word(r, corpus);
    for (std::size_t k = 0; k < r.word.size(); ++k) run.letters.add(r.word[k] - 'a', r.read[k] - 'a');
    run.log.push_back(std::move(r));
  }
  run.outcome = outcome_from_counts(tally(run.log));
  return run;
}

inline ReadingRun simulate_reading(const braille::WordCorpus& corpus, const learn::ConfusionMatrix& cm,
                                   std::size_t n_words, std::uint64_t seed) {
  return simulate_reading(corpus, row_normalize(cm), n_words, seed);
}

/// Error counts per Braille dot (index 0 = dot 1): every off-diagonal
/// confusion adds its count to each dot where the two letters differ.
inline std::array<std::int64_t, 6> misread_pin_histogram(const learn::ConfusionMatrix& cm) {
  require(cm.size() == 26, ErrorKind::validation,
          "letter confusion matrix must be 26 x 26, got " + std::to_string(cm.size()));
  std::array<std::int64_t, 6> hist{};
  const auto& abc = braille::alphabet();
  for (std::size_t t = 0; t < 26; ++t)
    for (std::size_t p = 0; p < 26; ++p) {
      if (t == p || cm.at(t, p) == 0) continue;
      const auto diff = static_cast<std::uint8_t>(abc[t].dots ^ abc[p].dots);
      for (int d = 0; d < 6; ++d)
        if ((diff >> d) & 1U) hist[static_cast<std::size_t>(d)] += cm.at(t, p);
    }
  return hist;
}

}  // namespace acoustaxel::harness
