#pragma once
// In-memory experiment pipeline: STFT -> AuxIVA -> scaling -> inverse STFT
// -> metrics, plus the (p, q) sweep over a set of scenarios.

#include "gmdp/auxiva.hpp"
#include "gmdp/core.hpp"
#include "gmdp/metrics.hpp"
#include "gmdp/scaling.hpp"
#include "gmdp/simulate.hpp"
#include "gmdp/stft.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gmdp {

struct RunConfig {
  StftConfig stft;
  AuxIvaConfig auxiva;
  ScalingMethod method = ScalingMethod::Gmdp;
  MixedNormParams gmdp;
  std::size_t ref_mic = 0;  // zero-based; the CLI and config files are one-based
  int workers = 1;

  void validate() const {
    stft.validate();
    auxiva.validate();
    if (method == ScalingMethod::Gmdp) gmdp.validate();
    if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  }
};

/// A mixture with its clean reference images at the reference microphone.
struct Scenario {
  std::string id;
  std::uint64_t seed = 0;
  MultichannelSignal mixtures;               // [m][t]
  std::vector<std::vector<double>> references;  // [k][t], images at ref mic
};

/// Build a synthetic scenario; references are the images at `ref_mic`.
inline Scenario make_synthetic_scenario(const std::string& id, const MixConfig& cfg, double seconds, double sample_rate,
                                        std::size_t ref_mic) {
  const auto length = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  const auto sources = synth_sources(cfg.sources, length, sample_rate, cfg.seed);
  Mixture mixed = mix(sources, cfg);
  if (ref_mic >= cfg.mics) throw Error(ErrorCode::ConfigError, "reference microphone out of range");
  Scenario s;
  s.id = id;
  s.seed = cfg.seed;
  s.mixtures = std::move(mixed.mixtures);
  for (auto& img : mixed.images) s.references.push_back(std::move(img[ref_mic]));
  return s;
}

/// Separation state reused across scaling methods and (p, q) cells.
struct PreparedScenario {
  const Scenario* scenario = nullptr;
  StftConfig stft;
  TensorSpectrogram mixture_spec;
  AuxIvaResult separation;
  std::size_t length = 0;
};

inline PreparedScenario prepare_scenario(const Scenario& s, const RunConfig& cfg) {
  PreparedScenario p;
  p.scenario = &s;
  p.stft = cfg.stft;
  p.length = detail::signal_length(s.mixtures);
  p.mixture_spec = stft_forward(s.mixtures, cfg.stft);
  try {
    p.separation = auxiva_separate(p.mixture_spec, cfg.auxiva);
  } catch (const Error& e) {
    throw Error(e.code(), "scenario " + s.id + ": " + e.detail());
  }
  return p;
}

/// Time-domain images of every source at one microphone.
struct RenderedImages {
  std::vector<std::vector<double>> estimates;  // [k][t]
  std::vector<int> iterations;                 // [k]
  std::vector<std::vector<double>> traces;     // [k], GMDP only
  std::vector<ScalingVector> coefficients;     // [k]
};

inline RenderedImages render_images(const PreparedScenario& prep, ScalingMethod method, const MixedNormParams& params,
                                    std::size_t ref_mic) {
  const auto& y = prep.separation.sources;
  const auto& x = prep.mixture_spec;
  if (ref_mic >= x.channels()) throw Error(ErrorCode::ConfigError, "reference microphone out of range");
  const std::size_t K = y.channels();
  RenderedImages out;
  std::vector<ScalingVector> z(K);
  out.iterations.assign(K, 1);
  out.traces.assign(K, {});
  switch (method) {
    case ScalingMethod::ProjectionBack: {
      const ScalingResult pb = projection_back(prep.separation.demixing, y);
      for (std::size_t k = 0; k < K; ++k) z[k] = pb.coefficients[k][ref_mic];
      break;
    }
    case ScalingMethod::Mdp:
      for (std::size_t k = 0; k < K; ++k) z[k] = mdp_coefficients(x.channel(ref_mic).matrix(), y.channel(k).matrix());
      break;
    case ScalingMethod::Gmdp:
      for (std::size_t k = 0; k < K; ++k) {
        GmdpSolution sol = gmdp_single(x.channel(ref_mic).matrix(), y.channel(k).matrix(), params);
        z[k] = std::move(sol.z);
        out.iterations[k] = sol.iterations;
        out.traces[k] = std::move(sol.objective_trace);
      }
      break;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const Spectrogram image(CMatrix(z[k].asDiagonal() * y.channel(k).matrix()));
    out.estimates.push_back(istft_channel(image, prep.stft, prep.length));
  }
  out.coefficients = std::move(z);
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Aggregated metrics of one scaling configuration over a scenario set.
struct CellResult {
  ScalingMethod method = ScalingMethod::Gmdp;
  double p = 0.0;
  double q = 0.0;
  double mean_si_sdr = 0.0;
  double mean_si_sir = 0.0;
  double median_iterations = 0.0;
  std::vector<EvalReport> reports;          // per scenario
  std::vector<std::vector<int>> iterations;  // [scenario][k]
};

inline CellResult evaluate_cell(const std::vector<PreparedScenario>& set, ScalingMethod method, const MixedNormParams& params,
                                std::size_t ref_mic) {
  CellResult cell;
  cell.method = method;
  cell.p = params.p;
  cell.q = params.q;
  std::vector<double> iters;
  for (const auto& prep : set) {
    RenderedImages r = render_images(prep, method, params, ref_mic);
    cell.reports.push_back(evaluate(r.estimates, prep.scenario->references));
    cell.mean_si_sdr += cell.reports.back().mean_si_sdr;
    cell.mean_si_sir += cell.reports.back().mean_si_sir;
    for (int it : r.iterations) iters.push_back(it);
    cell.iterations.push_back(std::move(r.iterations));
  }
  if (!set.empty()) {
    cell.mean_si_sdr /= static_cast<double>(set.size());
    cell.mean_si_sir /= static_cast<double>(set.size());
  }
  cell.median_iterations = median(std::move(iters));
  return cell;
}

/// Values start, start + step, ... up to stop (inclusive), rounded to 1e-9.
inline std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw Error(ErrorCode::ConfigError, "grid needs step > 0 and stop >= start");
  std::vector<double> g;
  for (long i = 0;; ++i) {
    const double v = std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
    if (v > stop + 1e-9) break;
    g.push_back(v);
  }
  return g;
}

/// Valid (p, q) pairs of the grid product, sorted by (p, q); pairs with p > q
/// or outside (0, 2] are dropped.
inline std::vector<std::pair<double, double>> valid_pairs(const std::vector<double>& p_grid, const std::vector<double>& q_grid) {
  std::vector<std::pair<double, double>> out;
  for (double p : p_grid)
    for (double q : q_grid)
      if (p > 0.0 && q <= 2.0 + 1e-12 && p <= q + 1e-12) out.emplace_back(p, std::min(q, 2.0));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// GMDP over every valid (p, q) cell. Cells run on `workers` threads; the
/// result order is the sorted cell order regardless of scheduling.
inline std::vector<CellResult> sweep(const std::vector<PreparedScenario>& set, const std::vector<std::pair<double, double>>& cells,
                                     const MixedNormParams& base, std::size_t ref_mic, int workers) {
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        MixedNormParams params = base;
        params.p = cells[i].first;
        params.q = cells[i].second;
        results[i] = evaluate_cell(set, ScalingMethod::Gmdp, params, ref_mic);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace gmdp
