#pragma once

#include <acoustaxel/error.hpp>

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace acoustaxel::signal {

enum class SweepShape { linear, logarithmic };

struct AudioConfig {
  int sample_rate_hz = 48000;
  int bit_depth = 32;  // metadata only
  double sweep_duration_s = 1.0;
  double sweep_f_start_hz = 100.0;
  double sweep_f_end_hz = 10000.0;
  SweepShape sweep_shape = SweepShape::linear;
  // Raised-cosine fade applied at both ends of the sweep. Zero gives a flat envelope.
  double sweep_taper_s = 0.005;

  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::llround(sweep_duration_s * sample_rate_hz));
  }

  void validate() const {
    require(sample_rate_hz > 0, ErrorKind::config, "sample_rate_hz must be positive");
    require(sweep_duration_s > 0.0, ErrorKind::config, "sweep_duration_s must be positive");
    require(sweep_f_start_hz > 0.0, ErrorKind::config, "sweep_f_start_hz must be positive");
    require(sweep_f_start_hz <= sweep_f_end_hz, ErrorKind::config,
            "sweep_f_start_hz must not exceed sweep_f_end_hz");
    require(sweep_f_end_hz < sample_rate_hz / 2.0, ErrorKind::config,
            "sweep_f_end_hz must be below Nyquist (" + std::to_string(sample_rate_hz / 2.0) + " Hz)");
    const double count = sweep_duration_s * sample_rate_hz;
    require(std::abs(count - std::round(count)) < 1e-6, ErrorKind::config,
            "sweep_duration_s * sample_rate_hz must be an integer sample count");
    require(sweep_taper_s >= 0.0 && 2.0 * sweep_taper_s <= sweep_duration_s, ErrorKind::config,
            "sweep_taper_s must lie in [0, duration/2]");
  }
};

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 48000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

enum class WindowFn { rectangular, hann };

struct StftConfig {
  std::size_t window_size = 2048;
  std::size_t hop_size = 512;
  WindowFn window_fn = WindowFn::hann;

  std::size_t bin_count() const { return window_size / 2 + 1; }

  void validate() const {
    require(window_size >= 2 && std::has_single_bit(window_size), ErrorKind::config,
            "window_size must be a power of two >= 2");
    require(hop_size >= 1 && hop_size <= window_size, ErrorKind::config,
            "hop_size must lie in [1, window_size]");
  }

  std::size_t frame_count(std::size_t length) const {
    require(length >= window_size, ErrorKind::size,
            "waveform of " + std::to_string(length) + " samples is shorter than window " +
                std::to_string(window_size));
    return (length - window_size) / hop_size + 1;
  }
};

using Complex = std::complex<double>;

struct ComplexSpectrumFrame {
  std::vector<Complex> bins;  // window_size / 2 + 1 one-sided bins
  double bin_resolution_hz = 0.0;
};

/// Instantaneous frequency of the configured sweep at time `t_s`.
inline double sweep_frequency_at(const AudioConfig& config, double t_s) {
  const double f0 = config.sweep_f_start_hz;
  const double f1 = config.sweep_f_end_hz;
  const double duration = config.sweep_duration_s;
  if (config.sweep_shape == SweepShape::logarithmic && f1 > f0)
    return f0 * std::pow(f1 / f0, t_s / duration);
  return f0 + (f1 - f0) * t_s / duration;
}

/// Unit-amplitude chirp from f_start to f_end. Deterministic.
inline Waveform generate_sweep(const AudioConfig& config) {
  config.validate();
  const std::size_t n = config.sample_count();
  const double rate = config.sample_rate_hz;
  const double f0 = config.sweep_f_start_hz;
  const double f1 = config.sweep_f_end_hz;
  const double duration = config.sweep_duration_s;
  const bool logarithmic = config.sweep_shape == SweepShape::logarithmic && f1 > f0;
  const double log_ratio = logarithmic ? std::log(f1 / f0) : 0.0;

  const std::size_t taper = static_cast<std::size_t>(std::llround(config.sweep_taper_s * rate));

  Waveform out;
  out.sample_rate_hz = config.sample_rate_hz;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double cycles;
    if (logarithmic)
      cycles = f0 * duration / log_ratio * (std::exp(log_ratio * t / duration) - 1.0);
    else
      cycles = f0 * t + 0.5 * (f1 - f0) * t * t / duration;
    // Reduce before multiplying by 2*pi to keep the phase accurate late in the sweep.
    cycles -= std::floor(cycles);
    double value = std::sin(2.0 * std::numbers::pi * cycles);
    if (taper > 0) {
      const std::size_t edge = std::min(i, n - 1 - i);
      if (edge < taper)
        value *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / taper);
    }
    out.samples[i] = value;
  }
  return out;
}

inline std::vector<double> make_window(WindowFn fn, std::size_t size) {
  std::vector<double> w(size, 1.0);
  if (fn == WindowFn::hann) {
    // Periodic Hann; overlapping frames at hop = size/2 sum to a constant.
    for (std::size_t i = 0; i < size; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / size);
  }
  return w;
}

/// Iterative radix-2 complex FFT with a precomputed twiddle table.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size) : size_(size), twiddles_(size / 2), reversed_(size) {
    require(size >= 1 && std::has_single_bit(size), ErrorKind::size,
            "FFT length " + std::to_string(size) + " is not a power of two");
    for (std::size_t k = 0; k < size / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / size;
      twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
    }
    const int bits = std::countr_zero(size);
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      reversed_[i] = r;
    }
  }

  std::size_t size() const { return size_; }

  /// In-place forward transform, X[k] = sum_n x[n] exp(-2 pi i k n / N).
  void forward(std::span<Complex> data) const {
    require(data.size() == size_, ErrorKind::size, "FFT buffer length mismatch");
    for (std::size_t i = 0; i < size_; ++i)
      if (i < reversed_[i]) std::swap(data[i], data[reversed_[i]]);
    for (std::size_t len = 2; len <= size_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = size_ / len;
      for (std::size_t start = 0; start < size_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex t = twiddles_[k * stride] * data[start + k + half];
          data[start + k + half] = data[start + k] - t;
          data[start + k] += t;
        }
      }
    }
  }

  /// One-sided spectrum of a real frame of length N (N/2 + 1 bins).
  std::vector<Complex> real_forward(std::span<const double> frame) const {
    std::vector<Complex> buffer(frame.begin(), frame.end());
    forward(buffer);
    buffer.resize(size_ / 2 + 1);
    return buffer;
  }

 private:
  std::size_t size_;
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> reversed_;
};

/// Windowed copy of `frame`; the exact block an STFT frame transforms.
inline std::vector<double> apply_window(std::span<const double> frame, std::span<const double> window) {
  std::vector<double> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = frame[i] * window[i];
  return out;
}

inline ComplexSpectrumFrame dft(std::span<const double> frame, WindowFn window_fn,
                                int sample_rate_hz = 48000) {
  require(frame.size() >= 1 && std::has_single_bit(frame.size()), ErrorKind::size,
          "dft frame length " + std::to_string(frame.size()) + " is not a power of two");
  const FftPlan plan(frame.size());
  const auto window = make_window(window_fn, frame.size());
  ComplexSpectrumFrame out;
  out.bins = plan.real_forward(apply_window(frame, window));
  out.bin_resolution_hz = static_cast<double>(sample_rate_hz) / frame.size();
  return out;
}

/// Frame i covers samples [i*hop, i*hop + window_size).
inline std::vector<ComplexSpectrumFrame> stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t frames = cfg.frame_count(w.size());
  const FftPlan plan(cfg.window_size);
  const auto window = make_window(cfg.window_fn, cfg.window_size);
  const std::span<const double> samples(w.samples);

  std::vector<ComplexSpectrumFrame> out(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const auto block = apply_window(samples.subspan(i * cfg.hop_size, cfg.window_size), window);
    out[i].bins = plan.real_forward(block);
    out[i].bin_resolution_hz = static_cast<double>(w.sample_rate_hz) / cfg.window_size;
  }
  return out;
}

}  // namespace acoustaxel::signal
