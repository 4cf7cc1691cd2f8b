#pragma once
// Source-image estimation from separated sources: projection back, the
// least-squares minimal distortion principle, and its mixed-norm
// generalization solved by majorization-minimization (IRLS).

#include "gmdp/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace gmdp {

/// Images and coefficients for every (mic m, source k) pair.
struct ScalingResult {
  std::vector<TensorSpectrogram> images;                // images[k].channel(m)
  std::vector<std::vector<ScalingVector>> coefficients;  // coefficients[k][m]
  std::vector<std::vector<int>> iterations_used;         // [k][m]
  std::vector<std::vector<std::vector<double>>> objective_trace;  // [k][m], GMDP only

  std::size_t sources() const { return images.size(); }
  std::size_t mics() const { return images.empty() ? 0 : images.front().channels(); }
};

/// Output of one GMDP subproblem X_m ~ diag(z) Y_k.
struct GmdpSolution {
  ScalingVector z;
  int iterations = 0;
  /// ||X - diag(z_t) Y||_{p,q}^p for t = 0 (MDP start) .. iterations.
  std::vector<double> objective_trace;
  /// True when the stopping rule fired before max_iters.
  bool converged = false;
};

// ---------------------------------------------------------------------------

/// (sum_n (sum_f |e_fn|^q)^(p/q))^(1/p); frequency is the inner sum.
inline double mixed_norm(const CMatrix& e, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw Error(ErrorCode::InvalidExponent, "mixed norm needs p > 0 and q > 0");
  // Scale by the largest magnitude so tiny or huge residuals do not under/overflow.
  const double scale = e.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double outer = 0.0;
  for (Eigen::Index n = 0; n < e.cols(); ++n) {
    double inner = 0.0;
    for (Eigen::Index f = 0; f < e.rows(); ++f) inner += std::pow(std::abs(e(f, n)) / scale, q);
    outer += std::pow(inner, p / q);
  }
  return scale * std::pow(outer, 1.0 / p);
}

inline double mixed_norm(const Spectrogram& e, double p, double q) { return mixed_norm(e.matrix(), p, q); }

/// ||E||_{p,q}^p, the quantity the GMDP iterations decrease.
inline double mixed_norm_objective(const CMatrix& e, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw Error(ErrorCode::InvalidExponent, "mixed norm needs p > 0 and q > 0");
  double outer = 0.0;
  for (Eigen::Index n = 0; n < e.cols(); ++n) {
    double inner = 0.0;
    for (Eigen::Index f = 0; f < e.rows(); ++f) inner += std::pow(std::norm(e(f, n)), 0.5 * q);
    outer += std::pow(inner, p / q);
  }
  return outer;
}

/// X_m - diag(z) Y_k.
inline CMatrix residual(const CMatrix& x, const CMatrix& y, const ScalingVector& z) {
  return x - z.asDiagonal() * y;
}

// ---------------------------------------------------------------------------

/// images[k].channel(m)(f, n) = z_mkf * y_kfn.
inline ScalingResult apply_scaling(const std::vector<std::vector<ScalingVector>>& z, const TensorSpectrogram& y) {
  if (z.size() != y.channels())
    throw Error(ErrorCode::ShapeMismatch, "need coefficients for " + std::to_string(y.channels()) + " sources, got " +
                                              std::to_string(z.size()));
  ScalingResult out;
  const std::size_t M = z.empty() ? 0 : z.front().size();
  if (M == 0) throw Error(ErrorCode::ShapeMismatch, "no microphones in coefficient set");
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k].size() != M) throw Error(ErrorCode::ShapeMismatch, "every source needs the same number of microphones");
    std::vector<Spectrogram> mics;
    for (std::size_t m = 0; m < M; ++m) {
      if (static_cast<std::size_t>(z[k][m].size()) != y.freqs())
        throw Error(ErrorCode::ShapeMismatch, "scaling vector length " + std::to_string(z[k][m].size()) + " != F = " +
                                                  std::to_string(y.freqs()));
      mics.emplace_back(CMatrix(z[k][m].asDiagonal() * y.channel(k).matrix()));
    }
    out.images.emplace_back(std::move(mics));
  }
  out.coefficients = z;
  out.iterations_used.assign(z.size(), std::vector<int>(M, 1));
  out.objective_trace.assign(z.size(), std::vector<std::vector<double>>(M));
  return out;
}

/// Image of source k at mic m is (W_f^{-1})_{mk} y_kfn.
inline ScalingResult projection_back(const DemixingSet& w, const TensorSpectrogram& y) {
  if (w.freqs() != y.freqs() || w.sources() != y.channels())
    throw Error(ErrorCode::ShapeMismatch, "demixing set does not match separated sources");
  w.check_conditioning();
  const std::size_t K = y.channels();
  std::vector<std::vector<ScalingVector>> z(K, std::vector<ScalingVector>(K, ScalingVector(static_cast<Eigen::Index>(y.freqs()))));
  for (std::size_t f = 0; f < w.freqs(); ++f) {
    const CMatrix a = w[f].inverse();
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t m = 0; m < K; ++m)
        z[k][m](static_cast<Eigen::Index>(f)) = a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  }
  return apply_scaling(z, y);
}

/// Least-squares coefficient for one (m, k): z_f = <x_f, y_f> / ||y_f||^2, or 0
/// where y_f is identically zero.
inline ScalingVector mdp_coefficients(const CMatrix& x, const CMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw Error(ErrorCode::ShapeMismatch, "mic and source spectrograms differ in shape");
  ScalingVector z(x.rows());
  for (Eigen::Index f = 0; f < x.rows(); ++f) {
    const double energy = y.row(f).squaredNorm();
    z(f) = energy > 0.0 ? std::conj(x.row(f).dot(y.row(f))) / energy : cplx(0.0);  // dot() conjugates its left side
  }
  return z;
}

/// MDP coefficients of source k at every microphone of X.
inline std::vector<ScalingVector> mdp(const TensorSpectrogram& x, const TensorSpectrogram& y, std::size_t k) {
  if (k >= y.channels()) throw Error(ErrorCode::ShapeMismatch, "source index out of range");
  if (x.freqs() != y.freqs() || x.frames() != y.frames()) throw Error(ErrorCode::ShapeMismatch, "mixture and sources differ in shape");
  std::vector<ScalingVector> out;
  for (std::size_t m = 0; m < x.channels(); ++m) out.push_back(mdp_coefficients(x.channel(m).matrix(), y.channel(k).matrix()));
  return out;
}

// ---------------------------------------------------------------------------
// GMDP

namespace detail {

/// Absolute magnitude floor: params.floor times the RMS of X (or params.floor
/// itself when X is silent).
inline double absolute_floor(const CMatrix& x, double rel_floor) {
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  return rms > 0.0 ? rel_floor * rms : rel_floor;
}

/// IRLS weights w_fn = p / (2 S_n^(1 - p/q) |e_fn|^(2-q)) with
/// S_n = sum_f |e_fn|^q, where every |e| is smoothed as sqrt(|e|^2 + eps^2).
inline Eigen::MatrixXd mm_weights(const CMatrix& e, double p, double q, double eps) {
  const auto F = e.rows();
  const auto N = e.cols();
  Eigen::MatrixXd w(F, N);
  const double eps2 = eps * eps;
  for (Eigen::Index n = 0; n < N; ++n) {
    double s = 0.0;
    for (Eigen::Index f = 0; f < F; ++f) {
      const double r2 = std::norm(e(f, n)) + eps2;
      const double rq = std::pow(r2, 0.5 * q);
      w(f, n) = r2 / rq;  // |e|^(2-q), finished below
      s += rq;
    }
    const double outer = 2.0 * std::pow(s, 1.0 - p / q);
    for (Eigen::Index f = 0; f < F; ++f) w(f, n) = p / (outer * w(f, n));
  }
  return w;
}

/// Smoothed objective sum_n (sum_f (|e_fn|^2 + eps^2)^(q/2))^(p/q); the MM
/// surrogate built from mm_weights() majorizes this exactly.
inline double smoothed_objective(const CMatrix& e, double p, double q, double eps) {
  double outer = 0.0;
  for (Eigen::Index n = 0; n < e.cols(); ++n) {
    double inner = 0.0;
    for (Eigen::Index f = 0; f < e.rows(); ++f) inner += std::pow(std::norm(e(f, n)) + eps * eps, 0.5 * q);
    outer += std::pow(inner, p / q);
  }
  return outer;
}

/// Weighted least squares: z_f = sum_n w x y* / sum_n w |y|^2. Rows of y that
/// are identically zero get z_f = 0.
inline ScalingVector weighted_ls(const CMatrix& x, const CMatrix& y, const Eigen::MatrixXd& w) {
  ScalingVector z(x.rows());
  for (Eigen::Index f = 0; f < x.rows(); ++f) {
    cplx num = 0.0;
    double den = 0.0;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      num += w(f, n) * x(f, n) * std::conj(y(f, n));
      den += w(f, n) * std::norm(y(f, n));
    }
    z(f) = den > 0.0 ? num / den : cplx(0.0);
  }
  return z;
}

/// One MM update from z.
inline ScalingVector mm_step(const CMatrix& x, const CMatrix& y, const ScalingVector& z, double p, double q, double eps) {
  return weighted_ls(x, y, mm_weights(residual(x, y, z), p, q, eps));
}

}  // namespace detail

/// Relative increase tolerated before an MM update is rejected as rounding noise.
inline constexpr double kAcceptSlack = 1e-12;

/// Mixed-norm scaling for one (mic, source) pair.
///
/// Starts from the MDP solution and applies MM updates until max_iters or
/// until ||z_t - z_{t-1}|| / ||z_{t-1}|| <= rel_tol (norms over the
/// non-degenerate frequencies). An update that would raise the objective is
/// rejected and the iteration stops at the previous iterate; this only
/// happens once residual entries sit below the smoothing floor.
inline GmdpSolution gmdp_single(const CMatrix& x, const CMatrix& y, const MixedNormParams& params) {
  params.validate();
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw Error(ErrorCode::ShapeMismatch, "mic and source spectrograms differ in shape");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFiniteEntry, "gmdp input contains NaN or Inf");

  const double p = params.p;
  const double q = params.q;
  const double eps = detail::absolute_floor(x, params.floor);

  std::vector<bool> active(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index f = 0; f < x.rows(); ++f) active[static_cast<std::size_t>(f)] = y.row(f).squaredNorm() > 0.0;
  auto active_norm = [&](const ScalingVector& v) {
    double s = 0.0;
    for (Eigen::Index f = 0; f < v.size(); ++f)
      if (active[static_cast<std::size_t>(f)]) s += std::norm(v(f));
    return std::sqrt(s);
  };

  GmdpSolution sol;
  sol.z = mdp_coefficients(x, y);
  sol.objective_trace.push_back(mixed_norm_objective(residual(x, y, sol.z), p, q));

  for (int t = 1; t <= params.max_iters; ++t) {
    ScalingVector next = detail::mm_step(x, y, sol.z, p, q, eps);
    const double obj = mixed_norm_objective(residual(x, y, next), p, q);
    if (obj > sol.objective_trace.back() * (1.0 + kAcceptSlack)) {
      sol.converged = true;
      break;
    }
    const double prev_norm = active_norm(sol.z);
    const double step = active_norm(next - sol.z);
    sol.z = std::move(next);
    sol.iterations = t;
    sol.objective_trace.push_back(obj);
    const bool done = prev_norm > 0.0 ? step <= params.rel_tol * prev_norm : active_norm(sol.z) <= params.floor;
    if (done) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

/// GMDP for source k at every microphone in X.
inline std::vector<GmdpSolution> gmdp(const TensorSpectrogram& x, const TensorSpectrogram& y, std::size_t k,
                                      const MixedNormParams& params) {
  params.validate();
  if (k >= y.channels()) throw Error(ErrorCode::ShapeMismatch, "source index out of range");
  if (x.freqs() != y.freqs() || x.frames() != y.frames()) throw Error(ErrorCode::ShapeMismatch, "mixture and sources differ in shape");
  std::vector<GmdpSolution> out;
  for (std::size_t m = 0; m < x.channels(); ++m) out.push_back(gmdp_single(x.channel(m).matrix(), y.channel(k).matrix(), params));
  return out;
}

// ---------------------------------------------------------------------------
// Whole-mixture drivers restricted to a chosen set of microphones.

enum class ScalingMethod { ProjectionBack, Mdp, Gmdp };

inline ScalingMethod parse_scaling_method(const std::string& s) {
  if (s == "pb") return ScalingMethod::ProjectionBack;
  if (s == "mdp") return ScalingMethod::Mdp;
  if (s == "gmdp") return ScalingMethod::Gmdp;
  throw Error(ErrorCode::ConfigError, "unknown scaling method '" + s + "' (expected pb, mdp or gmdp)");
}

inline const char* method_name(ScalingMethod m) {
  switch (m) {
    case ScalingMethod::ProjectionBack: return "pb";
    case ScalingMethod::Mdp: return "mdp";
    case ScalingMethod::Gmdp: return "gmdp";
  }
  return "?";
}

/// MDP images of every source at every microphone.
inline ScalingResult mdp_all(const TensorSpectrogram& x, const TensorSpectrogram& y) {
  std::vector<std::vector<ScalingVector>> z;
  for (std::size_t k = 0; k < y.channels(); ++k) z.push_back(mdp(x, y, k));
  return apply_scaling(z, y);
}

/// GMDP images of every source at every microphone; the (m, k) problems are
/// independent.
inline ScalingResult gmdp_all(const TensorSpectrogram& x, const TensorSpectrogram& y, const MixedNormParams& params) {
  std::vector<std::vector<ScalingVector>> z(y.channels());
  std::vector<std::vector<int>> iters(y.channels());
  std::vector<std::vector<std::vector<double>>> traces(y.channels());
  for (std::size_t k = 0; k < y.channels(); ++k) {
    for (auto& s : gmdp(x, y, k, params)) {
      z[k].push_back(std::move(s.z));
      iters[k].push_back(s.iterations);
      traces[k].push_back(std::move(s.objective_trace));
    }
  }
  ScalingResult out = apply_scaling(z, y);
  out.iterations_used = std::move(iters);
  out.objective_trace = std::move(traces);
  return out;
}

}  // namespace gmdp
