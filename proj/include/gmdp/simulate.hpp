#pragma once
// Seeded synthetic convolutive mixtures with ground-truth source images.
//
// Each (mic m, source k) path is a short FIR filter: a direct-path tap
// (stronger on the m == k diagonal) plus Gaussian taps under an exponential
// envelope. Everything is reproducible from MixConfig::seed.

#include "gmdp/core.hpp"
#include "gmdp/stft.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gmdp {

struct MixConfig {
  std::size_t sources = 2;
  std::size_t mics = 2;
  std::size_t filter_length = 256;
  double decay = 0.98;         // amplitude envelope decay^t on the random taps
  double direct_gain = 1.0;    // tap-0 gain on the m == k path
  double cross_gain = 0.6;     // tap-0 gain on m != k paths, relative to direct_gain
  double reverb_gain = 0.3;    // standard deviation of the random taps at t = 0
  std::optional<double> noise_snr;  // dB, white noise; disabled when empty
  std::uint64_t seed = 0;

  void validate() const {
    if (sources < 1) throw Error(ErrorCode::InvalidConfig, "need at least one source");
    if (mics < 1) throw Error(ErrorCode::InvalidConfig, "need at least one microphone");
    if (filter_length < 1) throw Error(ErrorCode::InvalidConfig, "filter_length must be >= 1");
    if (!(decay > 0.0 && decay <= 1.0)) throw Error(ErrorCode::InvalidConfig, "decay must lie in (0, 1]");
    if (!std::isfinite(direct_gain) || !std::isfinite(cross_gain) || !(reverb_gain >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "filter gains must be finite and reverb_gain >= 0");
    if (noise_snr && !std::isfinite(*noise_snr)) throw Error(ErrorCode::InvalidConfig, "noise_snr must be finite");
  }
};

/// filters[m][k] is the impulse response from source k to mic m.
using FilterBank = std::vector<std::vector<std::vector<double>>>;

inline FilterBank make_filters(const MixConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FilterBank h(cfg.mics, std::vector<std::vector<double>>(cfg.sources, std::vector<double>(cfg.filter_length, 0.0)));
  for (std::size_t m = 0; m < cfg.mics; ++m) {
    for (std::size_t k = 0; k < cfg.sources; ++k) {
      auto& taps = h[m][k];
      double env = cfg.reverb_gain;
      for (std::size_t t = 0; t < cfg.filter_length; ++t) {
        taps[t] = env * gauss(rng);
        env *= cfg.decay;
      }
      taps[0] += m == k ? cfg.direct_gain : cfg.cross_gain * cfg.direct_gain;
    }
  }
  return h;
}

/// Causal convolution truncated to the input length.
inline std::vector<double> convolve_truncated(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t taps = std::min(h.size(), t + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < taps; ++i) acc += h[i] * x[t - i];
    y[t] = acc;
  }
  return y;
}

struct Mixture {
  MultichannelSignal mixtures;              // [m][t]
  std::vector<MultichannelSignal> images;   // [k][m][t]
};

inline Mixture mix_with_filters(const MultichannelSignal& sources, const FilterBank& h, const MixConfig& cfg) {
  cfg.validate();
  const std::size_t T = detail::signal_length(sources);
  if (sources.size() != cfg.sources)
    throw Error(ErrorCode::ShapeMismatch, "config declares " + std::to_string(cfg.sources) + " sources, got " + std::to_string(sources.size()));
  Mixture out;
  out.mixtures.assign(cfg.mics, std::vector<double>(T, 0.0));
  out.images.assign(cfg.sources, MultichannelSignal(cfg.mics));
  for (std::size_t k = 0; k < cfg.sources; ++k) {
    for (std::size_t m = 0; m < cfg.mics; ++m) {
      out.images[k][m] = convolve_truncated(sources[k], h[m][k]);
      for (std::size_t t = 0; t < T; ++t) out.mixtures[m][t] += out.images[k][m][t];
    }
  }
  if (cfg.noise_snr) {
    double power = 0.0;
    for (const auto& ch : out.mixtures)
      for (double v : ch) power += v * v;
    power /= static_cast<double>(cfg.mics * T);
    const double sigma = std::sqrt(power * std::pow(10.0, -*cfg.noise_snr / 10.0));
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& ch : out.mixtures)
      for (double& v : ch) v += gauss(rng);
  }
  return out;
}

/// Convolve sources with make_filters(cfg) and sum per microphone.
inline Mixture mix(const MultichannelSignal& sources, const MixConfig& cfg) {
  return mix_with_filters(sources, make_filters(cfg), cfg);
}

/// Speech-like test signal: bursts of harmonic-plus-noise excitation with
/// Laplacian amplitudes under a raised-cosine envelope, separated by silence.
inline std::vector<double> synth_source(std::size_t length, double sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> x(length, 0.0);
  std::size_t t = static_cast<std::size_t>(uni(rng) * 0.1 * sample_rate);
  while (t < length) {
    const auto dur = static_cast<std::size_t>((0.08 + 0.25 * uni(rng)) * sample_rate);
    const double amp = expo(rng) + 0.05;  // magnitude of a Laplacian draw
    const double f0 = 90.0 + 210.0 * uni(rng);
    const double glide = 1.0 + 0.3 * (uni(rng) - 0.5);
    const double voicing = uni(rng);
    const auto harmonics = static_cast<int>(std::min(40.0, 0.45 * sample_rate / (f0 * std::max(glide, 1.0))));
    std::vector<double> phase(static_cast<std::size_t>(harmonics));
    std::vector<double> hamp(static_cast<std::size_t>(harmonics));
    for (int i = 0; i < harmonics; ++i) {
      phase[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * uni(rng);
      hamp[static_cast<std::size_t>(i)] = (0.5 + uni(rng)) / (1.0 + i);
    }
    double noise_state = 0.0;
    for (std::size_t i = 0; i < dur && t + i < length; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(dur);
      const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
      const double f = f0 * (1.0 + (glide - 1.0) * u);
      double v = 0.0;
      for (int h = 0; h < harmonics; ++h) {
        auto& ph = phase[static_cast<std::size_t>(h)];
        ph += 2.0 * std::numbers::pi * f * (h + 1) / sample_rate;
        v += hamp[static_cast<std::size_t>(h)] * std::sin(ph);
      }
      noise_state = 0.7 * noise_state + gauss(rng);  // low-passed noise
      x[t + i] = amp * env * (voicing * v + (1.0 - voicing) * 0.3 * noise_state);
    }
    t += dur + static_cast<std::size_t>((0.02 + 0.2 * uni(rng)) * sample_rate);
  }
  // Normalize to unit RMS so source power does not depend on burst statistics.
  double e = 0.0;
  for (double v : x) e += v * v;
  if (e > 0.0) {
    const double g = 1.0 / std::sqrt(e / static_cast<double>(length));
    for (double& v : x) v *= g;
  }
  return x;
}

/// K synthetic sources seeded from a scenario seed.
inline MultichannelSignal synth_sources(std::size_t count, std::size_t length, double sample_rate, std::uint64_t seed) {
  MultichannelSignal s;
  for (std::size_t k = 0; k < count; ++k) s.push_back(synth_source(length, sample_rate, seed * 1000003ULL + 17ULL * (k + 1)));
  return s;
}

}  // namespace gmdp
