#pragma once

#include <acoustaxel/error.hpp>
#include <acoustaxel/signal.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace acoustaxel::features {

using signal::StftConfig;
using signal::Waveform;

enum class ReprKind { waveform, spectrum, smoothed_spectrum, spectrogram, mel_spectrogram, mfcc };

inline constexpr std::array<ReprKind, 6> kAllReprKinds = {
    ReprKind::waveform,    ReprKind::spectrum,        ReprKind::smoothed_spectrum,
    ReprKind::spectrogram, ReprKind::mel_spectrogram, ReprKind::mfcc};

inline std::string_view to_string(ReprKind kind) {
  switch (kind) {
    case ReprKind::waveform: return "waveform";
    case ReprKind::spectrum: return "spectrum";
    case ReprKind::smoothed_spectrum: return "smoothed_spectrum";
    case ReprKind::spectrogram: return "spectrogram";
    case ReprKind::mel_spectrogram: return "mel_spectrogram";
    case ReprKind::mfcc: return "mfcc";
  }
  return "?";
}

inline ReprKind parse_repr_kind(std::string_view name) {
  for (ReprKind kind : kAllReprKinds)
    if (to_string(kind) == name) return kind;
  fail(ErrorKind::validation, "unknown representation '" + std::string(name) + "'");
}

struct FeatureVector {
  std::vector<double> values;
  ReprKind kind = ReprKind::waveform;
  std::vector<std::size_t> dims;  // {length} for 1D kinds, {frames, bins} for 2D kinds

  std::size_t size() const { return values.size(); }
};

struct MelConfig {
  std::size_t n_mels = 64;
  double f_min_hz = 100.0;
  double f_max_hz = 10000.0;
  std::size_t n_mfcc = 20;

  void validate(int sample_rate_hz) const {
    require(n_mels >= 1, ErrorKind::config, "n_mels must be positive");
    require(n_mfcc >= 1 && n_mfcc <= n_mels, ErrorKind::config, "n_mfcc must lie in [1, n_mels]");
    require(f_min_hz >= 0.0 && f_min_hz < f_max_hz, ErrorKind::config, "mel f_min must be below f_max");
    require(f_max_hz <= sample_rate_hz / 2.0, ErrorKind::config, "mel f_max exceeds Nyquist");
  }
};

/// Everything the extractors need besides the waveform.
struct FeatureConfigs {
  StftConfig stft;
  MelConfig mel;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Row-major n_mels x n_fft_bins triangular filter matrix.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_fft_bins = 0;
  std::vector<double> weights;
  std::vector<double> center_hz;

  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_fft_bins + bin]; }
};

inline MelFilterbank mel_filterbank(const MelConfig& cfg, std::size_t n_fft_bins, int sample_rate_hz) {
  cfg.validate(sample_rate_hz);
  require(n_fft_bins >= 2, ErrorKind::config, "need at least two FFT bins");
  const double bin_hz = sample_rate_hz / (2.0 * static_cast<double>(n_fft_bins - 1));

  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_hz);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (cfg.n_mels + 1));
  edges.front() = cfg.f_min_hz;
  edges.back() = cfg.f_max_hz;

  MelFilterbank fb;
  fb.n_mels = cfg.n_mels;
  fb.n_fft_bins = n_fft_bins;
  fb.weights.assign(cfg.n_mels * n_fft_bins, 0.0);
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    bool any = false;
    for (std::size_t k = 0; k < n_fft_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      fb.weights[m * n_fft_bins + k] = w;
      any = any || w > 0.0;
    }
    if (!any)
      fail(ErrorKind::config, "mel filter " + std::to_string(m) + " (" + std::to_string(lo) + "-" +
                                  std::to_string(hi) + " Hz) covers no FFT bin; reduce n_mels or enlarge window");
  }
  return fb;
}

/// Build-once, read-many cache keyed on the filterbank parameters.
inline std::shared_ptr<const MelFilterbank> cached_mel_filterbank(const MelConfig& cfg, std::size_t n_fft_bins,
                                                                  int sample_rate_hz) {
  using Key = std::tuple<std::size_t, double, double, std::size_t, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const MelFilterbank>> cache;
  const Key key{cfg.n_mels, cfg.f_min_hz, cfg.f_max_hz, n_fft_bins, sample_rate_hz};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const MelFilterbank>(mel_filterbank(cfg, n_fft_bins, sample_rate_hz));
  std::lock_guard lock(mutex);
  return cache.try_emplace(key, std::move(built)).first->second;
}

/// Orthonormal DCT-II basis, row k = coefficient k.
inline std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> basis(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n; ++i)
      basis[k * n + i] = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
  }
  return basis;
}

/// Magnitudes of every STFT frame, frames x bins row-major.
inline std::vector<double> magnitude_frames(const Waveform& w, const StftConfig& cfg, std::size_t& frames) {
  const auto spectra = signal::stft(w, cfg);
  frames = spectra.size();
  const std::size_t bins = cfg.bin_count();
  std::vector<double> out(frames * bins);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t k = 0; k < bins; ++k) out[i * bins + k] = std::abs(spectra[i].bins[k]);
  return out;
}

/// Magnitude of the one-sided DFT of the whole recording, zero-padded to a power of two.
inline FeatureVector spectrum(const Waveform& w) {
  require(w.size() >= 2, ErrorKind::size, "spectrum needs at least two samples");
  const std::size_t n = std::bit_ceil(w.size());
  std::vector<double> padded(w.samples);
  padded.resize(n, 0.0);
  const auto bins = signal::FftPlan(n).real_forward(padded);
  FeatureVector out{std::vector<double>(bins.size()), ReprKind::spectrum, {bins.size()}};
  for (std::size_t k = 0; k < bins.size(); ++k) out.values[k] = std::abs(bins[k]);
  return out;
}

inline FeatureVector spectrogram(const Waveform& w, const StftConfig& cfg) {
  std::size_t frames = 0;
  auto mags = magnitude_frames(w, cfg, frames);
  return {std::move(mags), ReprKind::spectrogram, {frames, cfg.bin_count()}};
}

/// Per-bin sum of STFT frame magnitudes, accumulated in frame order.
inline FeatureVector smoothed_spectrum(const Waveform& w, const StftConfig& cfg) {
  std::size_t frames = 0;
  const auto mags = magnitude_frames(w, cfg, frames);
  const std::size_t bins = cfg.bin_count();
  std::vector<double> sum(bins, 0.0);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t k = 0; k < bins; ++k) sum[k] += mags[i * bins + k];
  return {std::move(sum), ReprKind::smoothed_spectrum, {bins}};
}

/// Mel-projected STFT power before log compression, frames x n_mels.
inline std::vector<double> mel_power(const Waveform& w, const StftConfig& stft_cfg, const MelConfig& mel_cfg,
                                     std::size_t& frames) {
  const auto mags = magnitude_frames(w, stft_cfg, frames);
  const std::size_t bins = stft_cfg.bin_count();
  const auto fb = cached_mel_filterbank(mel_cfg, bins, w.sample_rate_hz);
  std::vector<double> out(frames * mel_cfg.n_mels, 0.0);
  std::vector<double> power(bins);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t k = 0; k < bins; ++k) power[k] = mags[i * bins + k] * mags[i * bins + k];
    for (std::size_t m = 0; m < mel_cfg.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += fb->at(m, k) * power[k];
      out[i * mel_cfg.n_mels + m] = acc;
    }
  }
  return out;
}

inline FeatureVector mel_spectrogram(const Waveform& w, const StftConfig& stft_cfg, const MelConfig& mel_cfg) {
  std::size_t frames = 0;
  auto values = mel_power(w, stft_cfg, mel_cfg, frames);
  for (double& v : values) v = std::log1p(v);
  return {std::move(values), ReprKind::mel_spectrogram, {frames, mel_cfg.n_mels}};
}

/// Applies the truncated orthonormal DCT-II to each row of a frames x n_mels log-mel matrix.
inline std::vector<double> cepstra_from_log_mel(const std::vector<double>& log_mel, std::size_t frames,
                                                std::size_t n_mels, std::size_t n_mfcc) {
  const auto basis = dct_basis(n_mels);
  std::vector<double> out(frames * n_mfcc);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t k = 0; k < n_mfcc; ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < n_mels; ++m) acc += basis[k * n_mels + m] * log_mel[i * n_mels + m];
      out[i * n_mfcc + k] = acc;
    }
  return out;
}

inline FeatureVector mfcc(const Waveform& w, const StftConfig& stft_cfg, const MelConfig& mel_cfg) {
  const auto log_mel = mel_spectrogram(w, stft_cfg, mel_cfg);
  const std::size_t frames = log_mel.dims[0];
  return {cepstra_from_log_mel(log_mel.values, frames, mel_cfg.n_mels, mel_cfg.n_mfcc),
          ReprKind::mfcc,
          {frames, mel_cfg.n_mfcc}};
}

inline FeatureVector extract(const Waveform& w, ReprKind kind, const FeatureConfigs& cfgs) {
  switch (kind) {
    case ReprKind::waveform:
      require(!w.samples.empty(), ErrorKind::size, "empty waveform");
      return {w.samples, ReprKind::waveform, {w.size()}};
    case ReprKind::spectrum: return spectrum(w);
    case ReprKind::smoothed_spectrum: return smoothed_spectrum(w, cfgs.stft);
    case ReprKind::spectrogram: return spectrogram(w, cfgs.stft);
    case ReprKind::mel_spectrogram: return mel_spectrogram(w, cfgs.stft, cfgs.mel);
    case ReprKind::mfcc: return mfcc(w, cfgs.stft, cfgs.mel);
  }
  fail(ErrorKind::validation, "unknown representation");
}

/// Output shape of `extract` for a waveform of `length` samples, without computing it.
inline std::vector<std::size_t> feature_dims(ReprKind kind, std::size_t length, const FeatureConfigs& cfgs) {
  switch (kind) {
    case ReprKind::waveform: return {length};
    case ReprKind::spectrum: return {std::bit_ceil(length) / 2 + 1};
    case ReprKind::smoothed_spectrum: return {cfgs.stft.bin_count()};
    case ReprKind::spectrogram: return {cfgs.stft.frame_count(length), cfgs.stft.bin_count()};
    case ReprKind::mel_spectrogram: return {cfgs.stft.frame_count(length), cfgs.mel.n_mels};
    case ReprKind::mfcc: return {cfgs.stft.frame_count(length), cfgs.mel.n_mfcc};
  }
  return {};
}

}  // namespace acoustaxel::features
