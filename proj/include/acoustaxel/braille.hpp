#pragma once

#include <acoustaxel/error.hpp>
#include <acoustaxel/rng.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace acoustaxel::braille {

/// Two stacked 8-cell modules: 16 cells of 2 x 4 pins.
struct DisplayGeometry {
  int n_cols = 32;
  int n_rows = 4;
  int usable_cols = 29;  // columns under the actuator; the highest-x columns are excluded
  double within_cell_pitch_mm = 2.45;
  double between_cell_gap_mm = 3.97;
  double cell_pitch_mm = 6.42;
  double pin_height_mm = 0.7;
  double pin_force_n = 0.17;
  double surface_length_mm = 90.0;
  double surface_width_mm = 10.0;

  int cell_count() const { return n_cols / 2; }
  int usable_taxels() const { return usable_cols * n_rows; }
  /// Cells whose two columns both lie in the usable area.
  int usable_cells() const { return usable_cols / 2; }

  void validate() const {
    require(n_cols > 0 && n_rows > 0 && n_cols % 2 == 0, ErrorKind::config, "display must have an even column count");
    require(usable_cols > 0 && usable_cols <= n_cols, ErrorKind::config, "usable_cols must lie in [1, n_cols]");
    require(std::abs(within_cell_pitch_mm + between_cell_gap_mm - cell_pitch_mm) < 1e-9, ErrorKind::config,
            "cell pitch must equal within-cell pitch plus between-cell gap");
  }
};

struct TaxelCoord {
  int col = 0;
  int row = 0;

  friend bool operator==(const TaxelCoord&, const TaxelCoord&) = default;
};

/// Dense class code for a usable taxel, row-major over the usable grid.
inline int taxel_class(TaxelCoord t, const DisplayGeometry& geo) { return t.row * geo.usable_cols + t.col; }
inline TaxelCoord taxel_from_class(int code, const DisplayGeometry& geo) {
  return {code % geo.usable_cols, code / geo.usable_cols};
}

inline void check_taxel(TaxelCoord t, const DisplayGeometry& geo) {
  require(t.col >= 0 && t.col < geo.usable_cols && t.row >= 0 && t.row < geo.n_rows, ErrorKind::bounds,
          "taxel (col " + std::to_string(t.col) + ", row " + std::to_string(t.row) + ") outside the " +
              std::to_string(geo.usable_cols) + "x" + std::to_string(geo.n_rows) + " usable grid");
}

/// Boolean pin grid, row-major, true = pin extended.
class ContactPattern {
 public:
  ContactPattern() : ContactPattern(DisplayGeometry{}) {}
  explicit ContactPattern(const DisplayGeometry& geo)
      : n_rows_(geo.n_rows), n_cols_(geo.n_cols), cells_(static_cast<std::size_t>(geo.n_rows * geo.n_cols), 0) {}

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }

  bool at(int row, int col) const { return cells_[index(row, col)] != 0; }
  void set(int row, int col, bool extended = true) { cells_[index(row, col)] = extended ? 1 : 0; }

  int active_count() const {
    int n = 0;
    for (auto c : cells_) n += c;
    return n;
  }

  std::vector<TaxelCoord> active_pins() const {
    std::vector<TaxelCoord> out;
    for (int r = 0; r < n_rows_; ++r)
      for (int c = 0; c < n_cols_; ++c)
        if (at(r, c)) out.push_back({c, r});
    return out;
  }

  /// Row-major '0'/'1' string.
  std::string to_bits() const {
    std::string s(cells_.size(), '0');
    for (std::size_t i = 0; i < cells_.size(); ++i) s[i] = cells_[i] ? '1' : '0';
    return s;
  }

  static ContactPattern from_bits(std::string_view bits, const DisplayGeometry& geo) {
    ContactPattern p(geo);
    require(bits.size() == p.cells_.size(), ErrorKind::parse,
            "pattern string has " + std::to_string(bits.size()) + " cells, expected " + std::to_string(p.cells_.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) {
      require(bits[i] == '0' || bits[i] == '1', ErrorKind::parse, "pattern string must be 0/1");
      p.cells_[i] = bits[i] == '1' ? 1 : 0;
    }
    return p;
  }

  friend bool operator==(const ContactPattern&, const ContactPattern&) = default;

 private:
  std::size_t index(int row, int col) const {
    require(row >= 0 && row < n_rows_ && col >= 0 && col < n_cols_, ErrorKind::bounds,
            "pin (row " + std::to_string(row) + ", col " + std::to_string(col) + ") outside the display");
    return static_cast<std::size_t>(row * n_cols_ + col);
  }

  int n_rows_;
  int n_cols_;
  std::vector<std::uint8_t> cells_;
};

/// Rejects patterns that extend pins outside the usable columns.
inline void check_label_pattern(const ContactPattern& p, const DisplayGeometry& geo) {
  require(p.rows() == geo.n_rows && p.cols() == geo.n_cols, ErrorKind::validation, "pattern does not match geometry");
  for (const auto& t : p.active_pins())
    require(t.col < geo.usable_cols, ErrorKind::validation,
            "pattern extends pin in column " + std::to_string(t.col) + " outside the usable area");
}

/// Pin centre in mm relative to pin (0, 0).
inline std::pair<double, double> pin_position(TaxelCoord t, const DisplayGeometry& geo = {}) {
  check_taxel(t, geo);
  const int cell = t.col / 2;
  const int in_cell = t.col % 2;
  return {cell * geo.cell_pitch_mm + in_cell * geo.within_cell_pitch_mm, t.row * geo.within_cell_pitch_mm};
}

// Dots 1-3 run down the left column, 4-6 down the right column.
struct BrailleLetter {
  char letter;
  std::uint8_t dots;  // bit (d - 1) set for dot d

  bool has_dot(int d) const { return (dots >> (d - 1)) & 1U; }
};

namespace detail {
constexpr std::uint8_t dots(std::initializer_list<int> list) {
  std::uint8_t mask = 0;
  for (int d : list) mask |= static_cast<std::uint8_t>(1U << (d - 1));
  return mask;
}
}  // namespace detail

inline const std::array<BrailleLetter, 26>& alphabet() {
  using detail::dots;
  static const std::array<BrailleLetter, 26> table = {{
      {'a', dots({1})},          {'b', dots({1, 2})},          {'c', dots({1, 4})},       {'d', dots({1, 4, 5})},
      {'e', dots({1, 5})},       {'f', dots({1, 2, 4})},       {'g', dots({1, 2, 4, 5})}, {'h', dots({1, 2, 5})},
      {'i', dots({2, 4})},       {'j', dots({2, 4, 5})},       {'k', dots({1, 3})},       {'l', dots({1, 2, 3})},
      {'m', dots({1, 3, 4})},    {'n', dots({1, 3, 4, 5})},    {'o', dots({1, 3, 5})},    {'p', dots({1, 2, 3, 4})},
      {'q', dots({1, 2, 3, 4, 5})}, {'r', dots({1, 2, 3, 5})}, {'s', dots({2, 3, 4})},    {'t', dots({2, 3, 4, 5})},
      {'u', dots({1, 3, 6})},    {'v', dots({1, 2, 3, 6})},    {'w', dots({2, 4, 5, 6})}, {'x', dots({1, 3, 4, 6})},
      {'y', dots({1, 3, 4, 5, 6})}, {'z', dots({1, 3, 5, 6})},
  }};
  return table;
}

inline const BrailleLetter& letter(char c) {
  require(c >= 'a' && c <= 'z', ErrorKind::validation, std::string("not a letter a-z: '") + c + "'");
  return alphabet()[static_cast<std::size_t>(c - 'a')];
}

/// Dot d (1-6) to its (column offset, row) inside a cell.
inline TaxelCoord dot_offset(int d) { return {d <= 3 ? 0 : 1, (d - 1) % 3}; }

inline ContactPattern letter_to_pattern(const BrailleLetter& l, int cell_index, const DisplayGeometry& geo = {}) {
  require(cell_index >= 0 && cell_index < geo.usable_cells(), ErrorKind::bounds,
          "cell " + std::to_string(cell_index) + " outside usable cells [0, " + std::to_string(geo.usable_cells()) + ")");
  ContactPattern p(geo);
  for (int d = 1; d <= 6; ++d) {
    if (!l.has_dot(d)) continue;
    const auto off = dot_offset(d);
    p.set(off.row, 2 * cell_index + off.col);
  }
  return p;
}

enum class Axis { x, y };

struct LinePattern {
  ContactPattern pattern;
  double label_mm = 0.0;
};

/// x-line: every pin of one column; y-line: every usable pin of one row.
inline LinePattern line_pattern(Axis axis, int index, const DisplayGeometry& geo = {}) {
  LinePattern out{ContactPattern(geo), 0.0};
  if (axis == Axis::x) {
    require(index >= 0 && index < geo.usable_cols, ErrorKind::bounds, "x-line index out of range");
    for (int r = 0; r < geo.n_rows; ++r) out.pattern.set(r, index);
    out.label_mm = pin_position({index, 0}, geo).first;
  } else {
    require(index >= 0 && index < geo.n_rows, ErrorKind::bounds, "y-line index out of range");
    for (int c = 0; c < geo.usable_cols; ++c) out.pattern.set(index, c);
    out.label_mm = pin_position({0, index}, geo).second;
  }
  return out;
}

inline int hamming(std::string_view a, std::string_view b) {
  require(a.size() == b.size(), ErrorKind::length,
          "hamming distance of '" + std::string(a) + "' and '" + std::string(b) + "' with unequal lengths");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

inline bool is_lower_word(std::string_view w) {
  if (w.empty()) return false;
  for (char c : w)
    if (c < 'a' || c > 'z') return false;
  return true;
}

/// Words in descending frequency order.
class WordCorpus {
 public:
  explicit WordCorpus(std::vector<std::string> words) : words_(std::move(words)) {
    require(!words_.empty(), ErrorKind::validation, "word corpus is empty");
    for (std::size_t i = 0; i < words_.size(); ++i) {
      require(is_lower_word(words_[i]), ErrorKind::validation, "corpus word '" + words_[i] + "' is not lowercase a-z");
      const bool fresh = rank_.emplace(words_[i], i).second;
      require(fresh, ErrorKind::validation, "duplicate corpus word '" + words_[i] + "'");
      by_length_[words_[i].size()].push_back(i);
    }
  }

  /// One word per line. Blank lines are skipped; anything else outside a-z is an error.
  static WordCorpus load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open corpus " + path.string());
    std::vector<std::string> words;
    std::map<std::string, std::size_t> seen;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      require(is_lower_word(line), ErrorKind::validation,
              path.string() + ":" + std::to_string(number) + ": '" + line + "' is not lowercase a-z");
      const auto [it, fresh] = seen.emplace(line, number);
      require(fresh, ErrorKind::validation,
              path.string() + ":" + std::to_string(number) + ": duplicate of line " + std::to_string(it->second));
      words.push_back(line);
    }
    return WordCorpus(std::move(words));
  }

  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view w) const { return rank_.contains(std::string(w)); }

  const std::vector<std::size_t>& with_length(std::size_t n) const {
    static const std::vector<std::size_t> none;
    auto it = by_length_.find(n);
    return it == by_length_.end() ? none : it->second;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> rank_;
  std::map<std::size_t, std::vector<std::size_t>> by_length_;
};

/// Exact match wins; otherwise the nearest same-length word by Hamming distance,
/// ties going to the more frequent word. Unchanged if no word has that length.
inline std::string correct_word(std::string_view observed, const WordCorpus& corpus) {
  if (corpus.contains(observed)) return std::string(observed);
  const auto& candidates = corpus.with_length(observed.size());
  int best = std::numeric_limits<int>::max();
  const std::string* choice = nullptr;
  for (std::size_t idx : candidates) {  // ascending rank
    const int d = hamming(observed, corpus.words()[idx]);
    if (d < best) {
      best = d;
      choice = &corpus.words()[idx];
    }
  }
  return choice ? *choice : std::string(observed);
}

/// Row t = distribution of the letter read when letter t is shown.
using LetterProbabilities = std::array<std::array<double, 26>, 26>;

inline LetterProbabilities identity_probabilities() {
  LetterProbabilities p{};
  for (std::size_t i = 0; i < 26; ++i) p[i][i] = 1.0;
  return p;
}

inline void validate_probabilities(const LetterProbabilities& p) {
  for (std::size_t i = 0; i < 26; ++i) {
    double sum = 0.0;
    for (double v : p[i]) {
      require(v >= 0.0 && std::isfinite(v), ErrorKind::validation,
              std::string("negative or non-finite probability in row '") + char('a' + i) + "'");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::validation,
            std::string("confusion row '") + char('a' + i) + "' sums to " + std::to_string(sum));
  }
}

/// Replaces each letter independently with a draw from its confusion row.
inline std::string perturb_word(std::string_view word, const LetterProbabilities& p, Rng& rng) {
  validate_probabilities(p);
  std::string out(word);
  for (char& c : out) {
    require(c >= 'a' && c <= 'z', ErrorKind::validation, "word contains non a-z letter");
    const auto& row = p[static_cast<std::size_t>(c - 'a')];
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = 26;
    std::size_t last_nonzero = 0;
    for (std::size_t j = 0; j < 26; ++j) {
      if (row[j] > 0.0) last_nonzero = j;
      cumulative += row[j];
      if (pick == 26 && u < cumulative && row[j] > 0.0) pick = j;
    }
    c = static_cast<char>('a' + (pick == 26 ? last_nonzero : pick));
  }
  return out;
}

}  // namespace acoustaxel::braille
