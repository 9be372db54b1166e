#pragma once

#include <acoustaxel/error.hpp>
#include <acoustaxel/signal.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace acoustaxel::signal {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

enum class WavEncoding { pcm16, pcm24, pcm32, float32 };

namespace detail {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::uint32_t(b[at]) | std::uint32_t(b[at + 1]) << 8 | std::uint32_t(b[at + 2]) << 16 |
         std::uint32_t(b[at + 3]) << 24;
}

inline std::uint16_t read_u16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

[[noreturn]] inline void parse_failure(const std::string& path, std::size_t offset, const std::string& what) {
  fail(ErrorKind::parse, path + " at byte " + std::to_string(offset) + ": " + what);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

/// Reads a mono RIFF/WAVE file (PCM 16/24/32-bit or 32-bit float) into [-1, 1] samples.
inline Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  if (bytes.size() < 12) detail::parse_failure(name, bytes.size(), "file too short for a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) detail::parse_failure(name, 0, "missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) detail::parse_failure(name, 8, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::size_t chunk_size = detail::read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size())
      detail::parse_failure(name, pos + 4, "chunk size " + std::to_string(chunk_size) + " runs past end of file");

    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) detail::parse_failure(name, pos + 4, "fmt chunk shorter than 16 bytes");
      format = detail::read_u16(bytes, body);
      channels = detail::read_u16(bytes, body + 2);
      rate = detail::read_u32(bytes, body + 4);
      bits = detail::read_u16(bytes, body + 14);
      if (format == detail::kFormatExtensible) {
        if (chunk_size < 26) detail::parse_failure(name, body, "extensible fmt chunk too short");
        format = detail::read_u16(bytes, body + 24);
      }
      if (channels != 1)
        fail(ErrorKind::unsupported_format, name + ": " + std::to_string(channels) + " channels, only mono is supported");
      if (rate == 0) detail::parse_failure(name, body + 4, "sample rate is zero");
      const bool int_ok = format == detail::kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
      const bool float_ok = format == detail::kFormatFloat && bits == 32;
      if (!int_ok && !float_ok)
        fail(ErrorKind::unsupported_format, name + ": format tag " + std::to_string(format) + " with " +
                                                std::to_string(bits) + " bits per sample");
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) detail::parse_failure(name, pos, "data chunk before fmt chunk");
      const std::size_t width = bits / 8;
      if (chunk_size % width != 0)
        detail::parse_failure(name, pos + 4, "data size is not a multiple of the sample width");
      Waveform w;
      w.sample_rate_hz = static_cast<int>(rate);
      w.samples.resize(chunk_size / width);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const std::uint8_t* p = bytes.data() + body + i * width;
        double v;
        if (format == detail::kFormatFloat) {
          float f;
          std::memcpy(&f, p, 4);
          v = f;
        } else if (bits == 16) {
          std::int16_t s;
          std::memcpy(&s, p, 2);
          v = s / 32768.0;
        } else if (bits == 24) {
          std::int32_t s = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 | std::int32_t(p[2]) << 16;
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
        } else {
          std::int32_t s;
          std::memcpy(&s, p, 4);
          v = s / 2147483648.0;
        }
        if (!std::isfinite(v)) detail::parse_failure(name, body + i * width, "non-finite sample");
        w.samples[i] = v;
      }
      if (w.samples.empty()) detail::parse_failure(name, pos, "data chunk is empty");
      return w;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word aligned
  }
  detail::parse_failure(name, pos, have_fmt ? "no data chunk" : "no fmt chunk");
}

/// Writes a mono WAV file. Integer encodings scale by 2^(bits-1) and clamp, so
/// full-scale 1.0 maps to the largest positive code.
inline void write_wav(const Waveform& w, const std::filesystem::path& path, WavEncoding encoding = WavEncoding::pcm16) {
  require(!w.samples.empty(), ErrorKind::validation, "cannot write an empty waveform");
  require(w.sample_rate_hz > 0, ErrorKind::validation, "sample rate must be positive");

  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : encoding == WavEncoding::pcm24 ? 24 : 32;
  const std::uint16_t format = encoding == WavEncoding::float32 ? detail::kFormatFloat : detail::kFormatPcm;
  const std::uint32_t width = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(w.samples.size() * width);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_u32(out, 16);
  detail::put_u16(out, format);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * width);
  detail::put_u16(out, static_cast<std::uint16_t>(width));
  detail::put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_u32(out, data_size);

  for (double v : w.samples) {
    if (encoding == WavEncoding::float32) {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      detail::put_u32(out, u);
      continue;
    }
    const double scale = std::ldexp(1.0, bits - 1);
    const double q = std::clamp(std::round(v * scale), -scale, scale - 1.0);
    const auto s = static_cast<std::int64_t>(q);
    for (std::uint32_t b = 0; b < width; ++b) out.push_back(static_cast<std::uint8_t>(s >> (8 * b)));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) fail(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace acoustaxel::signal
