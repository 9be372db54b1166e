#pragma once

#include <acoustaxel/error.hpp>
#include <acoustaxel/features.hpp>

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acoustaxel {

static_assert(std::endian::native == std::endian::little, "record files are little-endian");

enum class LabelSchema { classification, regression_mm, taxel_2d };
enum class Split : std::uint8_t { train, test };

inline std::string_view to_string(LabelSchema s) {
  switch (s) {
    case LabelSchema::classification: return "classification";
    case LabelSchema::regression_mm: return "regression_mm";
    case LabelSchema::taxel_2d: return "taxel_2d";
  }
  return "?";
}

inline LabelSchema parse_label_schema(std::string_view name) {
  if (name == "classification") return LabelSchema::classification;
  if (name == "regression_mm") return LabelSchema::regression_mm;
  if (name == "taxel_2d") return LabelSchema::taxel_2d;
  fail(ErrorKind::validation, "unknown label schema '" + std::string(name) + "'");
}

/// Every sample carries a class index (letter, line or taxel code) used for
/// stratification; regression datasets also carry the target in mm.
struct SampleLabel {
  int class_index = 0;
  double scalar_mm = 0.0;

  friend bool operator==(const SampleLabel&, const SampleLabel&) = default;
};

struct Dataset {
  std::string experiment;  // provenance tag, e.g. "LETTERS"
  LabelSchema schema = LabelSchema::classification;
  features::ReprKind repr = features::ReprKind::smoothed_spectrum;
  std::vector<std::size_t> dims;
  std::size_t feature_length = 0;
  int sample_rate_hz = 48000;
  int grid_cols = 29;  // taxel code = row * grid_cols + col
  std::vector<std::string> class_names;
  std::uint64_t master_seed = 0;

  std::vector<float> features;  // size() x feature_length, row-major
  std::vector<SampleLabel> labels;
  std::vector<Split> splits;
  std::vector<std::string> patterns;  // optional provenance, '0'/'1' pin strings

  std::size_t size() const { return labels.size(); }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(features).subspan(i * feature_length, feature_length);
  }

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (auto t : splits) n += t == s;
    return n;
  }

  void add(const features::FeatureVector& fv, SampleLabel label, Split split, std::string pattern = {}) {
    if (labels.empty() && feature_length == 0) {
      feature_length = fv.size();
      dims = fv.dims;
      repr = fv.kind;
    }
    require(fv.size() == feature_length, ErrorKind::shape,
            "feature length " + std::to_string(fv.size()) + " differs from dataset length " +
                std::to_string(feature_length));
    for (double v : fv.values) {
      require(std::isfinite(v), ErrorKind::validation, "non-finite feature value");
      features.push_back(static_cast<float>(v));
    }
    labels.push_back(label);
    splits.push_back(split);
    patterns.push_back(std::move(pattern));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "acoustaxel-dataset";
  manifest["version"] = 1;
  manifest["experiment"] = ds.experiment;
  manifest["label_schema"] = std::string(to_string(ds.schema));
  manifest["representation"] = std::string(features::to_string(ds.repr));
  manifest["dims"] = ds.dims;
  manifest["feature_length"] = ds.feature_length;
  manifest["sample_count"] = ds.size();
  manifest["sample_rate_hz"] = ds.sample_rate_hz;
  manifest["grid_cols"] = ds.grid_cols;
  manifest["class_names"] = ds.class_names;
  manifest["seeds"] = {{"master", ds.master_seed}};
  manifest["record_file"] = "features.bin";
  manifest["record_type"] = "float32le";

  std::vector<int> classes;
  std::vector<double> targets;
  std::string split_tags;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    classes.push_back(ds.labels[i].class_index);
    targets.push_back(ds.labels[i].scalar_mm);
    split_tags.push_back(ds.splits[i] == Split::train ? 'T' : 'E');
  }
  manifest["class_index"] = classes;
  manifest["scalar_mm"] = targets;
  manifest["split"] = split_tags;
  manifest["patterns"] = ds.patterns;

  {
    std::ofstream out(dir / "manifest.json");
    if (!out) fail(ErrorKind::io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(1) << '\n';
  }
  std::ofstream bin(dir / "features.bin", std::ios::binary);
  if (!bin) fail(ErrorKind::io, "cannot write " + (dir / "features.bin").string());
  bin.write(reinterpret_cast<const char*>(ds.features.data()),
            static_cast<std::streamsize>(ds.features.size() * sizeof(float)));
  if (!bin) fail(ErrorKind::io, "write failed for " + (dir / "features.bin").string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::io, "cannot open " + manifest_path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  try {
    require(m.at("format") == "acoustaxel-dataset", ErrorKind::parse, "not a dataset manifest");
    require(m.at("version") == 1, ErrorKind::parse, "unsupported dataset manifest version");
    ds.experiment = m.at("experiment").get<std::string>();
    ds.schema = parse_label_schema(m.at("label_schema").get<std::string>());
    ds.repr = features::parse_repr_kind(m.at("representation").get<std::string>());
    ds.dims = m.at("dims").get<std::vector<std::size_t>>();
    ds.feature_length = m.at("feature_length").get<std::size_t>();
    ds.sample_rate_hz = m.at("sample_rate_hz").get<int>();
    ds.grid_cols = m.at("grid_cols").get<int>();
    ds.class_names = m.at("class_names").get<std::vector<std::string>>();
    ds.master_seed = m.at("seeds").at("master").get<std::uint64_t>();
    const auto classes = m.at("class_index").get<std::vector<int>>();
    const auto targets = m.at("scalar_mm").get<std::vector<double>>();
    const auto tags = m.at("split").get<std::string>();
    ds.patterns = m.at("patterns").get<std::vector<std::string>>();
    const auto n = m.at("sample_count").get<std::size_t>();
    require(classes.size() == n && targets.size() == n && tags.size() == n && ds.patterns.size() == n,
            ErrorKind::parse, "per-sample arrays disagree with sample_count");
    for (std::size_t i = 0; i < n; ++i) {
      ds.labels.push_back({classes[i], targets[i]});
      require(tags[i] == 'T' || tags[i] == 'E', ErrorKind::parse, "split tags must be T or E");
      ds.splits.push_back(tags[i] == 'T' ? Split::train : Split::test);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, manifest_path.string() + ": " + e.what());
  }

  const auto bin_path = dir / "features.bin";
  std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
  if (!bin) fail(ErrorKind::io, "cannot open " + bin_path.string());
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  const std::size_t expected = ds.size() * ds.feature_length * sizeof(float);
  require(bytes == expected, ErrorKind::parse,
          bin_path.string() + " holds " + std::to_string(bytes) + " bytes, manifest implies " + std::to_string(expected));
  ds.features.resize(ds.size() * ds.feature_length);
  bin.seekg(0);
  bin.read(reinterpret_cast<char*>(ds.features.data()), static_cast<std::streamsize>(bytes));
  if (!bin) fail(ErrorKind::io, "read failed for " + bin_path.string());
  return ds;
}

}  // namespace acoustaxel
