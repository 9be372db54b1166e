#pragma once

// Recomputes report metrics from the persisted CSV artifacts alone. It shares
// no metric code with the library so that a bug there cannot hide itself.

#include <acoustaxel/error.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace acoustaxel::harness {

struct CheckLine {
  std::string name;
  double reported = 0.0;
  double recomputed = 0.0;
  bool ok = false;
};

struct CheckResult {
  std::vector<CheckLine> lines;
  std::vector<std::string> problems;

  bool ok() const {
    if (!problems.empty()) return false;
    for (const auto& l : lines)
      if (!l.ok) return false;
    return true;
  }
};

namespace checker {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorKind::parse, "missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  Table t;
  std::string line;
  if (std::getline(in, line)) t.header = split_csv(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv(line));
  return t;
}

inline double to_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end && *end == '\0' && !s.empty(), ErrorKind::parse, "not a number: '" + s + "'");
  return v;
}

inline std::map<std::string, std::string> read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    require(eq != std::string::npos, ErrorKind::parse, "bad report line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

}  // namespace checker

inline CheckResult check_report(const std::filesystem::path& dir, double tol = 1e-12) {
  using checker::to_real;
  CheckResult res;
  const auto kv = checker::read_report(dir / "report.txt");
  auto compare = [&](const std::string& metric, double recomputed) {
    const auto it = kv.find("metric." + metric);
    if (it == kv.end()) {
      res.problems.push_back("report lacks metric." + metric);
      return;
    }
    const double reported = to_real(it->second);
    res.lines.push_back({metric, reported, recomputed, std::abs(reported - recomputed) <= tol});
  };

  if (kv.count("experiment") && kv.at("experiment") == "WORDS") {
    const auto t = checker::read_csv(dir / "words.csv");
    const auto cw = t.column("word"), cr = t.column("read"), cc = t.column("corrected"), co = t.column("outcome");
    double n = 0, exact = 0, correct = 0, existing = 0, failed = 0, misread = 0, back = 0;
    for (const auto& r : t.rows) {
      ++n;
      const bool same = r[cr] == r[cw];
      exact += same;
      misread += !same;
      back += !same && r[cc] == r[cw];
      if (r[co] == "correct") {
        ++correct;
        if (r[cc] != r[cw]) res.problems.push_back("row marked correct but corrected != word");
      } else if (r[co] == "misread_existing") {
        ++existing;
      } else if (r[co] == "failed") {
        ++failed;
      } else {
        res.problems.push_back("unknown outcome '" + r[co] + "'");
      }
    }
    if (correct + existing + failed != n) res.problems.push_back("outcome counts do not sum to n_words");
    compare("n_words", n);
    compare("fraction_correct_after_correction", correct / n);
    compare("fraction_misread_to_existing_word", existing / n);
    compare("fraction_heuristic_failed", failed / n);
    compare("fraction_corrected_back", misread > 0 ? back / misread : 0.0);
    compare("fraction_correct_without_correction", exact / n);
    return res;
  }

  const auto t = checker::read_csv(dir / "predictions.csv");
  const std::string schema = kv.count("schema") ? kv.at("schema") : "";
  const auto crepr = t.column("repr"), ctc = t.column("true_class"), cpc = t.column("pred_class");
  const auto ctm = t.column("true_mm"), cpm = t.column("pred_mm");

  // Rows grouped by representation (REPRBENCH holds several).
  std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
  std::vector<std::string> order;
  for (const auto& r : t.rows) {
    if (!groups.count(r[crepr])) order.push_back(r[crepr]);
    groups[r[crepr]].push_back(&r);
  }

  if (kv.count("experiment") && kv.at("experiment") == "REPRBENCH") {
    for (const auto& name : order) {
      double hit = 0;
      for (const auto* r : groups[name]) hit += (*r)[ctc] == (*r)[cpc];
      compare("accuracy." + name, hit / static_cast<double>(groups[name].size()));
    }
    return res;
  }

  if (schema == "regression_mm") {
    double sq = 0;
    for (const auto& r : t.rows) {
      const double d = to_real(r[cpm]) - to_real(r[ctm]);
      sq += d * d;
    }
    compare("rmse_mm", std::sqrt(sq / static_cast<double>(t.rows.size())));
    return res;
  }

  double hit = 0;
  std::map<std::pair<std::string, std::string>, long> counts;
  for (const auto& r : t.rows) {
    hit += r[ctc] == r[cpc];
    ++counts[{r[ctc], r[cpc]}];
  }
  compare("classification_rate", hit / static_cast<double>(t.rows.size()));

  // confusion.csv must hold exactly the recounted pairs.
  const auto cm = checker::read_csv(dir / "confusion.csv");
  long total = 0;
  for (std::size_t i = 0; i < cm.rows.size(); ++i)
    for (std::size_t j = 1; j < cm.rows[i].size(); ++j) {
      const long c = std::stol(cm.rows[i][j]);
      total += c;
      const auto it = counts.find({std::to_string(i), std::to_string(j - 1)});
      if (c != (it == counts.end() ? 0 : it->second))
        res.problems.push_back("confusion.csv cell (" + std::to_string(i) + ", " + std::to_string(j - 1) +
                               ") disagrees with predictions.csv");
    }
  if (total != static_cast<long>(t.rows.size())) res.problems.push_back("confusion.csv total != prediction count");

  if (schema == "taxel_2d") {
    const auto ctcol = t.column("true_col"), ctrow = t.column("true_row");
    const auto cpcol = t.column("pred_col"), cprow = t.column("pred_row");
    double xs = 0, ys = 0, both = 0, dist = 0;
    std::map<std::pair<long, long>, std::pair<double, long>> cells;
    for (const auto& r : t.rows) {
      const long tc = std::stol(r[ctcol]), tr = std::stol(r[ctrow]), pc = std::stol(r[cpcol]), pr = std::stol(r[cprow]);
      xs += tc == pc;
      ys += tr == pr;
      both += tc == pc && tr == pr;
      const double d = std::hypot(static_cast<double>(tc - pc), static_cast<double>(tr - pr));
      auto& cell = cells[{tr, tc}];
      cell.first += d;
      dist += d;
      ++cell.second;
    }
    const auto n = static_cast<double>(t.rows.size());
    compare("x_rate", xs / n);
    compare("y_rate", ys / n);
    compare("joint_rate", both / n);
    compare("mean_error_distance_taxels", dist / n);

    const auto em = checker::read_csv(dir / "taxel_error.csv");
    const auto er = em.column("row"), ec = em.column("col"), en = em.column("count"), ed = em.column("mean_distance");
    for (const auto& r : em.rows) {
      const auto it = cells.find({std::stol(r[er]), std::stol(r[ec])});
      const long count = std::stol(r[en]);
      if (it == cells.end()) {
        if (count != 0 || !r[ed].empty()) res.problems.push_back("taxel_error.csv has data for an untested taxel");
        continue;
      }
      const double mean = it->second.first / static_cast<double>(it->second.second);
      if (count != it->second.second || std::abs(to_real(r[ed]) - mean) > tol)
        res.problems.push_back("taxel_error.csv cell (" + r[er] + ", " + r[ec] + ") disagrees with predictions.csv");
    }
  }
  return res;
}

}  // namespace acoustaxel::harness
