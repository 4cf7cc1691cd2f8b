#pragma once
// Minimal RIFF/WAVE reader and writer: 16-bit PCM and 32-bit IEEE float,
// any channel count.

#include "gmdp/core.hpp"
#include "gmdp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace gmdp {

enum class WavEncoding { Pcm16, Float32 };

struct WavData {
  MultichannelSignal channels;  // samples in [-1, 1] for PCM input
  std::uint32_t sample_rate = 16000;
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void wr_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void wr_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

inline WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::IoError, path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, n_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t chunk = detail::rd_u32(&buf[pos + 4]);
    const unsigned char* body = &buf[pos + 8];
    const std::size_t avail = std::min<std::size_t>(chunk, buf.size() - pos - 8);
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0 && avail >= 16) {
      format = detail::rd_u16(body);
      n_channels = detail::rd_u16(body + 2);
      rate = detail::rd_u32(body + 4);
      bits = detail::rd_u16(body + 14);
      if (format == 0xFFFE && avail >= 26) format = detail::rd_u16(body + 24);  // extensible: sub-format GUID
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      data = body;
      data_size = avail;
    }
    pos += 8 + chunk + (chunk & 1u);
  }
  if (data == nullptr || n_channels == 0) throw Error(ErrorCode::IoError, path + ": missing fmt or data chunk");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) throw Error(ErrorCode::IoError, path + ": only 16-bit PCM and 32-bit float WAV are supported");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * n_channels);
  WavData out;
  out.sample_rate = rate;
  out.channels.assign(n_channels, std::vector<double>(frames));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      const unsigned char* p = data + (t * n_channels + c) * width;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(detail::rd_u16(p));
        out.channels[c][t] = static_cast<double>(v) / 32768.0;
      } else {
        const std::uint32_t u = detail::rd_u32(p);
        float v;
        std::memcpy(&v, &u, 4);
        out.channels[c][t] = static_cast<double>(v);
      }
    }
  }
  return out;
}

inline void write_wav(const std::string& path, const MultichannelSignal& channels, std::uint32_t sample_rate,
                      WavEncoding encoding = WavEncoding::Float32) {
  const std::size_t frames = detail::signal_length(channels);
  const auto n_channels = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint32_t block = n_channels * (bits / 8u);
  const auto data_size = static_cast<std::uint32_t>(frames * block);

  std::string b;
  b.reserve(44 + data_size);
  b.append("RIFF");
  detail::wr_u32(b, 36 + data_size);
  b.append("WAVEfmt ");
  detail::wr_u32(b, 16);
  detail::wr_u16(b, encoding == WavEncoding::Pcm16 ? 1 : 3);
  detail::wr_u16(b, n_channels);
  detail::wr_u32(b, sample_rate);
  detail::wr_u32(b, sample_rate * block);
  detail::wr_u16(b, static_cast<std::uint16_t>(block));
  detail::wr_u16(b, bits);
  b.append("data");
  detail::wr_u32(b, data_size);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      const double v = channels[c][t];
      if (encoding == WavEncoding::Pcm16) {
        const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        detail::wr_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
      } else {
        const auto f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::wr_u32(b, u);
      }
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path);
  os.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!os) throw Error(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace gmdp
