#pragma once
// Multichannel short-time Fourier transform with perfect-reconstruction overlap-add.
//
// Frames start every `hop` samples on a signal that is front-padded with
// (window_length - hop) zeros and tail-padded to a whole number of hops, so
// every input sample is covered by window_length / hop frames.

#include "gmdp/core.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace gmdp {

/// channels x samples
using MultichannelSignal = std::vector<std::vector<double>>;

enum class WindowKind { SqrtHann, Hann, Rectangular };

inline WindowKind parse_window(const std::string& name) {
  if (name == "sqrt_hann") return WindowKind::SqrtHann;
  if (name == "hann") return WindowKind::Hann;
  if (name == "rect" || name == "rectangular") return WindowKind::Rectangular;
  throw Error(ErrorCode::ConfigError, "unknown window '" + name + "'");
}

inline const char* window_name(WindowKind w) {
  switch (w) {
    case WindowKind::SqrtHann: return "sqrt_hann";
    case WindowKind::Hann: return "hann";
    case WindowKind::Rectangular: return "rect";
  }
  return "?";
}

/// Periodic window of the given length; analysis and synthesis share it.
inline std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  const double L = static_cast<double>(length);
  for (std::size_t i = 0; i < length; ++i) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(i) / L);
    switch (kind) {
      case WindowKind::SqrtHann: w[i] = s; break;
      case WindowKind::Hann: w[i] = s * s; break;
      case WindowKind::Rectangular: break;
    }
  }
  return w;
}

struct StftConfig {
  std::size_t window_length = 2048;
  std::size_t hop = 512;
  WindowKind window = WindowKind::SqrtHann;
  double sample_rate = 16000.0;

  std::size_t freqs() const { return window_length / 2 + 1; }

  /// Overlap-add gain sum_j w(t + j*hop)^2; constant over t for accepted configs.
  double ola_gain() const {
    const auto w = make_window(window, window_length);
    double g = 0.0;
    for (std::size_t i = 0; i < window_length; i += hop) g += w[i] * w[i];
    return g;
  }

  void validate() const {
    if (window_length < 2 || window_length % 2 != 0) throw Error(ErrorCode::InvalidConfig, "window_length must be even and >= 2");
    if (hop == 0 || window_length % hop != 0) throw Error(ErrorCode::InvalidConfig, "hop must divide window_length");
    if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample_rate must be positive");
    const auto w = make_window(window, window_length);
    const double ref = ola_gain();
    for (std::size_t t = 0; t < hop; ++t) {
      double g = 0.0;
      for (std::size_t i = t; i < window_length; i += hop) g += w[i] * w[i];
      if (!(ref > 0.0) || std::abs(g - ref) > 1e-12 * ref)
        throw Error(ErrorCode::InvalidConfig, std::string("window ") + window_name(window) + " with hop " + std::to_string(hop) +
                                                  " does not satisfy constant overlap-add");
    }
  }

  std::size_t front_padding() const { return window_length - hop; }

  /// Frames needed so every sample of a length-`samples` signal is fully overlapped.
  std::size_t frames_for(std::size_t samples) const {
    return (front_padding() + samples - 1) / hop + 1;
  }

  /// Number of original samples recoverable from `frames` frames.
  std::size_t covered_length(std::size_t frames) const { return frames * hop; }
};

namespace detail {

inline std::size_t signal_length(const MultichannelSignal& signal) {
  if (signal.empty()) throw Error(ErrorCode::ShapeMismatch, "signal has no channels");
  const auto len = signal.front().size();
  for (const auto& ch : signal)
    if (ch.size() != len) throw Error(ErrorCode::ShapeMismatch, "channels have different lengths");
  return len;
}

}  // namespace detail

/// One channel to an F x N spectrogram.
inline Spectrogram stft_channel(const std::vector<double>& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.size() < cfg.window_length)
    throw Error(ErrorCode::SignalTooShort, "signal of " + std::to_string(x.size()) + " samples is shorter than the window (" +
                                               std::to_string(cfg.window_length) + ")");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteEntry, "signal contains NaN or Inf");

  const std::size_t L = cfg.window_length;
  const std::size_t n_frames = cfg.frames_for(x.size());
  const std::size_t pad = cfg.front_padding();
  const auto w = make_window(cfg.window, L);

  Spectrogram out(cfg.freqs(), n_frames);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(L);
  std::vector<cplx> bins;
  for (std::size_t n = 0; n < n_frames; ++n) {
    const std::size_t start = n * cfg.hop;  // in padded coordinates
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t padded = start + i;
      double v = 0.0;
      if (padded >= pad && padded - pad < x.size()) v = x[padded - pad];
      frame[i] = v * w[i];
    }
    fft.fwd(bins, frame);
    for (std::size_t f = 0; f < cfg.freqs(); ++f) out(f, n) = bins[f];
  }
  return out;
}

/// Overlap-add synthesis of one channel, returning `out_length` samples.
inline std::vector<double> istft_channel(const Spectrogram& spec, const StftConfig& cfg, std::size_t out_length) {
  cfg.validate();
  if (spec.freqs() != cfg.freqs())
    throw Error(ErrorCode::ShapeMismatch, "spectrogram has " + std::to_string(spec.freqs()) + " bins, config expects " +
                                              std::to_string(cfg.freqs()));
  if (out_length > cfg.covered_length(spec.frames()))
    throw Error(ErrorCode::ShapeMismatch, "requested length exceeds the span covered by the frames");

  const std::size_t L = cfg.window_length;
  const std::size_t pad = cfg.front_padding();
  const auto w = make_window(cfg.window, L);
  const double gain = cfg.ola_gain();

  std::vector<double> y(out_length, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cplx> bins(cfg.freqs());
  std::vector<double> frame;
  for (std::size_t n = 0; n < spec.frames(); ++n) {
    for (std::size_t f = 0; f < cfg.freqs(); ++f) bins[f] = spec(f, n);
    fft.inv(frame, bins, static_cast<Eigen::Index>(L));
    const std::size_t start = n * cfg.hop;
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t padded = start + i;
      if (padded < pad || padded - pad >= out_length) continue;
      y[padded - pad] += frame[i] * w[i] / gain;
    }
  }
  return y;
}

/// Transform every channel; channel order is preserved.
inline TensorSpectrogram stft_forward(const MultichannelSignal& signal, const StftConfig& cfg) {
  detail::signal_length(signal);
  std::vector<Spectrogram> channels;
  channels.reserve(signal.size());
  for (const auto& ch : signal) channels.push_back(stft_channel(ch, cfg));
  return TensorSpectrogram(std::move(channels));
}

inline MultichannelSignal stft_inverse(const TensorSpectrogram& spec, const StftConfig& cfg, std::size_t out_length) {
  MultichannelSignal out;
  out.reserve(spec.channels());
  for (const auto& ch : spec.all()) out.push_back(istft_channel(ch, cfg, out_length));
  return out;
}

}  // namespace gmdp
