#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace acoustaxel::sim {

/// Second-order section, normalized so a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  /// Peaking EQ (audio EQ cookbook): +gain boosts a resonance, -gain cuts a notch.
  static Biquad peaking(double center_hz, double q, double gain_db, double sample_rate_hz) {
    const double amp = std::pow(10.0, gain_db / 40.0);
    const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate_hz;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double cos_w0 = std::cos(w0);
    const double a0 = 1.0 + alpha / amp;
    Biquad f;
    f.b0 = (1.0 + alpha * amp) / a0;
    f.b1 = -2.0 * cos_w0 / a0;
    f.b2 = (1.0 - alpha * amp) / a0;
    f.a1 = -2.0 * cos_w0 / a0;
    f.a2 = (1.0 - alpha / amp) / a0;
    return f;
  }

  /// Both poles strictly inside the unit circle.
  bool stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }

  /// Filters in place from zero state (transposed direct form II).
  void process(std::span<double> x) const {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  }
};

}  // namespace acoustaxel::sim
