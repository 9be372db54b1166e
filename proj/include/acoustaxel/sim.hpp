#pragma once

#include <acoustaxel/biquad.hpp>
#include <acoustaxel/braille.hpp>
#include <acoustaxel/error.hpp>
#include <acoustaxel/rng.hpp>
#include <acoustaxel/signal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace acoustaxel::sim {

using braille::ContactPattern;
using braille::DisplayGeometry;
using braille::TaxelCoord;
using signal::AudioConfig;
using signal::Waveform;

struct Resonance {
  double center_hz;
  double q;
  double gain_db;

  friend bool operator==(const Resonance&, const Resonance&) = default;
};

/// Eight resonances log-spaced over 300-9000 Hz.
inline std::vector<Resonance> default_resonances() {
  std::vector<Resonance> out;
  constexpr int count = 8;
  for (int i = 0; i < count; ++i) {
    const double f = 300.0 * std::pow(9000.0 / 300.0, static_cast<double>(i) / (count - 1));
    out.push_back({f, 4.0, 6.0});
  }
  return out;
}

/// Affine taxel -> notch centre map: base + col_step * col + row_step * row.
struct NotchAssignment {
  double base_hz = 400.0;
  double col_step_hz = 290.0;
  double row_step_hz = 70.0;

  double center(TaxelCoord t) const { return base_hz + col_step_hz * t.col + row_step_hz * t.row; }
};

struct SimConfig {
  std::vector<Resonance> base_resonances = default_resonances();
  NotchAssignment notch_assign;
  double notch_depth_db = 6.0;
  double notch_q = 12.0;
  double mass_shift_per_pin = 0.0015;  // relative down-shift of every resonance per active pin
  double snr_db = 30.0;                // +inf disables noise
  double gain_jitter_db = 0.2;
  double output_gain = 0.25;           // headroom so recordings stay inside [-1, 1]
  std::uint64_t seed = 0;
  // Lets several taxels share one notch centre; only used by control runs.
  bool allow_shared_notches = false;
  DisplayGeometry geometry;

  static SimConfig noiseless() {
    SimConfig c;
    c.snr_db = std::numeric_limits<double>::infinity();
    c.gain_jitter_db = 0.0;
    return c;
  }

  bool notch_assignment_injective() const {
    std::set<double> centers;
    for (int r = 0; r < geometry.n_rows; ++r)
      for (int c = 0; c < geometry.usable_cols; ++c)
        if (!centers.insert(notch_assign.center({c, r})).second) return false;
    return true;
  }

  void validate() const {
    geometry.validate();
    for (const auto& res : base_resonances) {
      require(res.center_hz > 0.0 && res.q > 0.0 && std::isfinite(res.gain_db), ErrorKind::config,
              "resonance needs positive centre and q and a finite gain");
    }
    for (int r = 0; r < geometry.n_rows; ++r)
      for (int c = 0; c < geometry.usable_cols; ++c) {
        const double f = notch_assign.center({c, r});
        require(f > 100.0 && f < 10000.0, ErrorKind::config,
                "notch for taxel (" + std::to_string(c) + ", " + std::to_string(r) + ") at " + std::to_string(f) +
                    " Hz is outside (100, 10000) Hz");
      }
    require(allow_shared_notches || notch_assignment_injective(), ErrorKind::config,
            "notch assignment maps two taxels to the same frequency");
    require(notch_q > 0.0 && notch_depth_db >= 0.0, ErrorKind::config, "notch_q must be positive, depth >= 0");
    require(mass_shift_per_pin >= 0.0 && mass_shift_per_pin * geometry.usable_taxels() < 0.5, ErrorKind::config,
            "mass_shift_per_pin must be >= 0 and keep resonances above half their rest frequency");
    require(!std::isnan(snr_db) && snr_db > -std::numeric_limits<double>::infinity(), ErrorKind::config,
            "snr_db must be a number (inf disables noise)");
    require(gain_jitter_db >= 0.0 && std::isfinite(gain_jitter_db), ErrorKind::config, "gain_jitter_db must be >= 0");
    require(output_gain > 0.0 && std::isfinite(output_gain), ErrorKind::config, "output_gain must be positive");
  }
};

/// Forward model of the sensorized actuator. Holds the excitation sweep so
/// batch synthesis does not regenerate it.
class Simulator {
 public:
  Simulator(AudioConfig audio, SimConfig sim)
      : audio_(std::move(audio)), sim_(std::move(sim)), sweep_(signal::generate_sweep(audio_)) {
    sim_.validate();
    for (const auto& res : sim_.base_resonances)
      require(res.center_hz < audio_.sample_rate_hz / 2.0, ErrorKind::config, "resonance above Nyquist");
  }

  const AudioConfig& audio() const { return audio_; }
  const SimConfig& config() const { return sim_; }
  const Waveform& sweep() const { return sweep_; }

  /// Filter cascade for a pattern: shifted resonances followed by one notch per distinct centre.
  std::vector<Biquad> channel(const ContactPattern& pattern) const {
    require(pattern.rows() == sim_.geometry.n_rows && pattern.cols() == sim_.geometry.n_cols, ErrorKind::validation,
            "pattern dimensions do not match the display geometry");
    std::set<double> notches;
    int active = 0;
    for (const auto& pin : pattern.active_pins()) {
      if (pin.col >= sim_.geometry.usable_cols) continue;  // not under the actuator
      ++active;
      notches.insert(sim_.notch_assign.center(pin));
    }
    const double rate = audio_.sample_rate_hz;
    const double shift = 1.0 - sim_.mass_shift_per_pin * active;
    std::vector<Biquad> out;
    for (const auto& res : sim_.base_resonances)
      out.push_back(Biquad::peaking(res.center_hz * shift, res.q, res.gain_db, rate));
    for (double f : notches) out.push_back(Biquad::peaking(f, sim_.notch_q, -sim_.notch_depth_db, rate));
    return out;
  }

  /// Noise-free, jitter-free channel output.
  Waveform clean_response(const ContactPattern& pattern) const {
    Waveform out = sweep_;
    for (double& v : out.samples) v *= sim_.output_gain;
    for (const auto& f : channel(pattern)) f.process(out.samples);
    return out;
  }

  /// Recording for one contact pattern; deterministic in (pattern, config, sample_seed).
  Waveform synthesize(const ContactPattern& pattern, std::uint64_t sample_seed) const {
    Waveform out = clean_response(pattern);
    Rng rng(derive_seed(sim_.seed, sample_seed));
    const double jitter_db = rng.normal() * sim_.gain_jitter_db;
    const double gain = std::pow(10.0, jitter_db / 20.0);
    for (double& v : out.samples) v *= gain;
    if (std::isfinite(sim_.snr_db)) {
      double power = 0.0;
      for (double v : out.samples) power += v * v;
      power /= static_cast<double>(out.samples.size());
      const double sigma = std::sqrt(power / std::pow(10.0, sim_.snr_db / 10.0));
      for (double& v : out.samples) v += sigma * rng.normal();
    }
    for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
    return out;
  }

 private:
  AudioConfig audio_;
  SimConfig sim_;
  Waveform sweep_;
};

inline Waveform synthesize(const ContactPattern& pattern, const AudioConfig& audio, const SimConfig& sim,
                           std::uint64_t sample_seed) {
  return Simulator(audio, sim).synthesize(pattern, sample_seed);
}

/// Contact-free channel output (no noise, no jitter).
inline Waveform base_channel_response(const AudioConfig& audio, const SimConfig& sim) {
  const Simulator s(audio, sim);
  return s.clean_response(ContactPattern(sim.geometry));
}

/// Impulse response of the full filter cascade for `pattern`, `length` samples long.
inline std::vector<double> channel_impulse_response(const ContactPattern& pattern, const AudioConfig& audio,
                                                    const SimConfig& sim, std::size_t length) {
  const Simulator s(audio, sim);
  std::vector<double> h(length, 0.0);
  h[0] = 1.0;
  for (const auto& f : s.channel(pattern)) f.process(h);
  return h;
}

}  // namespace acoustaxel::sim
