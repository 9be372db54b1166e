#pragma once

#include <acoustaxel/harness/experiment.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace acoustaxel::harness {

namespace detail {

class FileWriter {
 public:
  explicit FileWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  }
  ~FileWriter() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0) fail(ErrorKind::io, "write failed for " + path_.string());
  }
  std::ofstream& stream() { return out_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_predictions(const ExperimentReport& rep, const std::filesystem::path& path, int grid_cols) {
  FileWriter f(path);
  auto& out = f.stream();
  const bool taxel = rep.schema == LabelSchema::taxel_2d;
  out << "repr,sample,true_class,pred_class,true_mm,pred_mm";
  if (taxel) out << ",true_col,true_row,pred_col,pred_row";
  out << '\n';
  for (const auto& p : rep.predictions) {
    out << p.repr << ',' << p.sample << ',' << p.true_class << ',' << p.pred_class << ',' << format_real(p.true_mm)
        << ',' << format_real(p.pred_mm);
    if (taxel) {
      const auto t = decode_taxel(p.true_class, grid_cols), q = decode_taxel(p.pred_class, grid_cols);
      out << ',' << t.col << ',' << t.row << ',' << q.col << ',' << q.row;
    }
    out << '\n';
  }
}

inline void write_confusion(const learn::ConfusionMatrix& cm, const std::filesystem::path& path) {
  FileWriter f(path);
  auto& out = f.stream();
  out << "true\\pred";
  for (const auto& n : cm.class_names()) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out << cm.class_names()[i];
    for (std::size_t j = 0; j < cm.size(); ++j) out << ',' << cm.at(i, j);
    out << '\n';
  }
}

inline void write_error_map(const learn::TaxelErrorMap& map, const std::filesystem::path& path) {
  FileWriter f(path);
  auto& out = f.stream();
  out << "row,col,count,mean_distance\n";
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      out << r << ',' << c << ',' << map.count[static_cast<std::size_t>(r * map.cols + c)] << ',';
      if (!map.blank(r, c)) out << format_real(map.at(r, c));
      out << '\n';
    }
}

}  // namespace detail

/// Reads a confusion.csv as written by write_report.
inline learn::ConfusionMatrix read_confusion(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return cells;
  };
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, path.string() + ": empty file");
  auto header = split(line);
  require(header.size() >= 2, ErrorKind::parse, path.string() + ":1: header needs class names");
  learn::ConfusionMatrix cm(std::vector<std::string>(header.begin() + 1, header.end()));
  std::size_t row = 0;
  for (int number = 2; std::getline(in, line); ++number) {
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(number) + ": ";
    const auto cells = split(line);
    require(row < cm.size(), ErrorKind::parse, where + "more rows than classes");
    require(cells.size() == cm.size() + 1, ErrorKind::parse, where + "expected " + std::to_string(cm.size() + 1) + " cells");
    for (std::size_t j = 0; j < cm.size(); ++j) {
      long long v = 0;
      try {
        std::size_t used = 0;
        v = std::stoll(cells[j + 1], &used);
        require(used == cells[j + 1].size(), ErrorKind::parse, where + "bad count '" + cells[j + 1] + "'");
      } catch (const std::logic_error&) {
        fail(ErrorKind::parse, where + "bad count '" + cells[j + 1] + "'");
      }
      require(v >= 0, ErrorKind::validation, where + "negative count");
      cm.add(static_cast<int>(row), static_cast<int>(j), v);
    }
    ++row;
  }
  require(row == cm.size(), ErrorKind::parse, path.string() + ": expected " + std::to_string(cm.size()) + " rows");
  return cm;
}

inline constexpr int kReportGridCols = 29;

/// Writes report.txt plus the CSV artifacts that apply to the experiment.
inline void write_report(const ExperimentReport& rep, const std::filesystem::path& dir,
                         int grid_cols = kReportGridCols) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

  {
    detail::FileWriter f(dir / "report.txt");
    auto& out = f.stream();
    out << "# acoustaxel experiment report\n";
    for (const auto& [k, v] : rep.config_echo) out << k << " = " << v << '\n';
    out << "schema = " << to_string(rep.schema) << '\n';
    out << "grid_cols = " << grid_cols << '\n';
    for (const auto& [k, v] : rep.metrics) out << "metric." << k << " = " << format_real(v) << '\n';
    for (const auto& [k, v] : rep.context) out << "context." << k << " = " << format_real(v) << '\n';
    out << "wall_time_s = " << format_real(rep.wall_time_s) << '\n';
  }

  if (!rep.predictions.empty()) detail::write_predictions(rep, dir / "predictions.csv", grid_cols);
  if (rep.confusion) detail::write_confusion(*rep.confusion, dir / "confusion.csv");
  if (rep.error_map) detail::write_error_map(*rep.error_map, dir / "taxel_error.csv");
  if (rep.misread_pins) {
    detail::FileWriter f(dir / "misread_pins.csv");
    f.stream() << "dot,count\n";
    for (std::size_t d = 0; d < 6; ++d) f.stream() << d + 1 << ',' << (*rep.misread_pins)[d] << '\n';
  }
  if (!rep.accuracy.empty()) {
    detail::FileWriter f(dir / "accuracy.csv");
    f.stream() << "repr,accuracy,config\n";
    for (const auto& a : rep.accuracy) f.stream() << a.repr << ',' << format_real(a.accuracy) << ',' << a.config << '\n';
  }
  if (!rep.cv.empty()) {
    detail::FileWriter f(dir / "cv.csv");
    auto& out = f.stream();
    out << "repr,config,fold,score\n";
    for (const auto& row : rep.cv) {
      if (row.rejected) {
        out << row.repr << ',' << row.config << ",rejected,\n";
        continue;
      }
      for (std::size_t k = 0; k < row.fold_scores.size(); ++k)
        out << row.repr << ',' << row.config << ',' << k + 1 << ',' << format_real(row.fold_scores[k]) << '\n';
      out << row.repr << ',' << row.config << ',' << (row.selected ? "mean*" : "mean") << ',' << format_real(row.mean)
          << '\n';
    }
  }
  if (!rep.words.empty()) {
    detail::FileWriter f(dir / "words.csv");
    auto& out = f.stream();
    out << "index,word,read,corrected,outcome\n";
    for (std::size_t i = 0; i < rep.words.size(); ++i) {
      const auto& w = rep.words[i];
      out << i << ',' << w.word << ',' << w.read << ',' << w.corrected << ',' << to_string(w.outcome) << '\n';
    }
  }
}

}  // namespace acoustaxel::harness
