#pragma once

#include <acoustaxel/error.hpp>
#include <acoustaxel/features.hpp>
#include <acoustaxel/signal.hpp>
#include <acoustaxel/sim.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace acoustaxel::harness {

/// Audio, feature and simulator settings shared by every command.
struct RunConfig {
  signal::AudioConfig audio;
  features::FeatureConfigs features;
  sim::SimConfig sim;

  void validate() const {
    audio.validate();
    features.stft.validate();
    features.mel.validate(audio.sample_rate_hz);
    sim.validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || std::isnan(out)) throw std::invalid_argument("expected a number");
  return out;
}

template <typename Int>
Int parse_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false");
}

/// "center:q:gain_db" entries separated by commas.
inline std::vector<sim::Resonance> parse_resonances(const std::string& v) {
  std::vector<sim::Resonance> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto a = item.find(':');
    const auto b = a == std::string::npos ? a : item.find(':', a + 1);
    if (b == std::string::npos) throw std::invalid_argument("resonance entries must be center:q:gain_db");
    out.push_back({parse_real(trim(item.substr(0, a))), parse_real(trim(item.substr(a + 1, b - a - 1))),
                   parse_real(trim(item.substr(b + 1)))});
  }
  if (out.empty()) throw std::invalid_argument("empty resonance list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"audio.sample_rate_hz", [](RunConfig& c, const std::string& v) { c.audio.sample_rate_hz = parse_int<int>(v); }},
      {"audio.bit_depth", [](RunConfig& c, const std::string& v) { c.audio.bit_depth = parse_int<int>(v); }},
      {"audio.sweep_duration_s", [](RunConfig& c, const std::string& v) { c.audio.sweep_duration_s = parse_real(v); }},
      {"audio.sweep_f_start_hz", [](RunConfig& c, const std::string& v) { c.audio.sweep_f_start_hz = parse_real(v); }},
      {"audio.sweep_f_end_hz", [](RunConfig& c, const std::string& v) { c.audio.sweep_f_end_hz = parse_real(v); }},
      {"audio.sweep_taper_s", [](RunConfig& c, const std::string& v) { c.audio.sweep_taper_s = parse_real(v); }},
      {"audio.sweep_shape",
       [](RunConfig& c, const std::string& v) {
         if (v == "linear") c.audio.sweep_shape = signal::SweepShape::linear;
         else if (v == "logarithmic") c.audio.sweep_shape = signal::SweepShape::logarithmic;
         else throw std::invalid_argument("expected linear or logarithmic");
       }},
      {"stft.window_size",
       [](RunConfig& c, const std::string& v) { c.features.stft.window_size = parse_int<std::size_t>(v); }},
      {"stft.hop_size", [](RunConfig& c, const std::string& v) { c.features.stft.hop_size = parse_int<std::size_t>(v); }},
      {"stft.window_fn",
       [](RunConfig& c, const std::string& v) {
         if (v == "hann") c.features.stft.window_fn = signal::WindowFn::hann;
         else if (v == "rectangular") c.features.stft.window_fn = signal::WindowFn::rectangular;
         else throw std::invalid_argument("expected hann or rectangular");
       }},
      {"mel.n_mels", [](RunConfig& c, const std::string& v) { c.features.mel.n_mels = parse_int<std::size_t>(v); }},
      {"mel.f_min_hz", [](RunConfig& c, const std::string& v) { c.features.mel.f_min_hz = parse_real(v); }},
      {"mel.f_max_hz", [](RunConfig& c, const std::string& v) { c.features.mel.f_max_hz = parse_real(v); }},
      {"mel.n_mfcc", [](RunConfig& c, const std::string& v) { c.features.mel.n_mfcc = parse_int<std::size_t>(v); }},
      {"sim.base_resonances", [](RunConfig& c, const std::string& v) { c.sim.base_resonances = parse_resonances(v); }},
      {"sim.notch_base_hz", [](RunConfig& c, const std::string& v) { c.sim.notch_assign.base_hz = parse_real(v); }},
      {"sim.notch_col_step_hz",
       [](RunConfig& c, const std::string& v) { c.sim.notch_assign.col_step_hz = parse_real(v); }},
      {"sim.notch_row_step_hz",
       [](RunConfig& c, const std::string& v) { c.sim.notch_assign.row_step_hz = parse_real(v); }},
      {"sim.notch_depth_db", [](RunConfig& c, const std::string& v) { c.sim.notch_depth_db = parse_real(v); }},
      {"sim.notch_q", [](RunConfig& c, const std::string& v) { c.sim.notch_q = parse_real(v); }},
      {"sim.mass_shift_per_pin", [](RunConfig& c, const std::string& v) { c.sim.mass_shift_per_pin = parse_real(v); }},
      {"sim.snr_db", [](RunConfig& c, const std::string& v) { c.sim.snr_db = parse_real(v); }},
      {"sim.gain_jitter_db", [](RunConfig& c, const std::string& v) { c.sim.gain_jitter_db = parse_real(v); }},
      {"sim.output_gain", [](RunConfig& c, const std::string& v) { c.sim.output_gain = parse_real(v); }},
      {"sim.seed", [](RunConfig& c, const std::string& v) { c.sim.seed = parse_int<std::uint64_t>(v); }},
      {"sim.allow_shared_notches",
       [](RunConfig& c, const std::string& v) { c.sim.allow_shared_notches = parse_bool(v); }},
  };
  return table;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

/// Parses `key = value` lines onto `base`. Blank lines and `#` comments are
/// ignored. Every error names the source and line.
inline RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base = {}) {
  std::string line;
  int line_no = 0;
  std::set<std::string, std::less<>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::config, where + "expected 'key = value'");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const auto it = detail::setters().find(key);
    require(it != detail::setters().end(), ErrorKind::config, where + "unknown key '" + key + "'");
    require(seen.insert(key).second, ErrorKind::config, where + "duplicate key '" + key + "'");
    require(!value.empty(), ErrorKind::config, where + "missing value for '" + key + "'");
    try {
      it->second(base, value);
    } catch (const std::invalid_argument& e) {
      fail(ErrorKind::config, where + "bad value '" + value + "' for '" + key + "': " + e.what());
    } catch (const std::out_of_range&) {
      fail(ErrorKind::config, where + "value '" + value + "' for '" + key + "' is out of range");
    }
  }
  try {
    base.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, source + ": " + e.what());
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file " + path.string());
  return parse_config(in, path.string(), std::move(base));
}

}  // namespace acoustaxel::harness
