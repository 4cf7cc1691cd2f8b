#pragma once
// Auxiliary-function IVA with the spherical Laplace contrast and
// iterative-projection (IP) updates of the demixing rows.

#include "gmdp/core.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace gmdp {

struct AuxIvaConfig {
  int n_iters = 50;
  double weight_floor = 1e-10;
  /// Condition-number threshold below which a weighted covariance product is
  /// considered singular (reciprocal condition estimate from LU).
  double singular_rcond = 1e-13;

  void validate() const {
    if (n_iters < 1) throw Error(ErrorCode::InvalidConfig, "auxiva n_iters must be >= 1");
    if (!(weight_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "auxiva weight_floor must be > 0");
  }
};

struct AuxIvaResult {
  DemixingSet demixing;
  TensorSpectrogram sources;
  /// Negative log-likelihood after initialization and after each iteration.
  std::vector<double> objective_trace;
};

/// y_fn = W_f x_fn for every bin.
inline TensorSpectrogram demix_apply(const DemixingSet& w, const TensorSpectrogram& mix) {
  if (w.freqs() != mix.freqs() || w.sources() != mix.channels())
    throw Error(ErrorCode::ShapeMismatch, "demixing set is " + std::to_string(w.freqs()) + " x " + std::to_string(w.sources()) +
                                              ", mixture is " + std::to_string(mix.freqs()) + " bins x " +
                                              std::to_string(mix.channels()) + " channels");
  TensorSpectrogram out(mix.channels(), mix.freqs(), mix.frames());
  for (std::size_t f = 0; f < mix.freqs(); ++f) out.set_frequency_slice(f, w[f] * mix.frequency_slice(f));
  return out;
}

namespace detail {

/// Cross-frequency l2 norm r_kn of each source at each frame (K x N).
inline Eigen::MatrixXd source_frame_norms(const std::vector<CMatrix>& y_by_freq) {
  const auto K = y_by_freq.front().rows();
  const auto N = y_by_freq.front().cols();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(K, N);
  for (const auto& y : y_by_freq) r += y.cwiseAbs2();
  return r.cwiseSqrt();
}

/// sum_kn r_kn - 2 N sum_f log|det W_f|.
inline double auxiva_objective(const std::vector<CMatrix>& w, const std::vector<CMatrix>& y_by_freq) {
  const double N = static_cast<double>(y_by_freq.front().cols());
  double obj = source_frame_norms(y_by_freq).sum();
  for (const auto& wf : w) obj -= 2.0 * N * std::log(std::abs(wf.determinant()));
  return obj;
}

}  // namespace detail

/// Determined separation of a K-channel mixture into K sources.
///
/// W_f starts at the identity. Each iteration recomputes the Laplace weights
/// 1 / (2 max(r_kn, floor)) for one source, forms its weighted covariance per
/// frequency, and replaces row k of W_f with the IP solution. No scaling or
/// permutation correction is applied.
inline AuxIvaResult auxiva_separate(const TensorSpectrogram& mix, const AuxIvaConfig& cfg,
                                    const std::function<void(int, double)>& on_iteration = {}) {
  cfg.validate();
  mix.validate();
  const std::size_t K = mix.channels();
  if (K < 2) throw Error(ErrorCode::ShapeMismatch, "auxiva needs at least two channels");
  const std::size_t F = mix.freqs();
  const auto N = static_cast<Eigen::Index>(mix.frames());
  const auto Ki = static_cast<Eigen::Index>(K);

  std::vector<CMatrix> x(F), y(F), w(F, CMatrix::Identity(Ki, Ki));
  for (std::size_t f = 0; f < F; ++f) {
    x[f] = mix.frequency_slice(f);
    y[f] = x[f];
  }

  AuxIvaResult result;
  result.objective_trace.push_back(detail::auxiva_objective(w, y));

  Eigen::VectorXd phi(N);
  CMatrix v(Ki, Ki);
  for (int it = 0; it < cfg.n_iters; ++it) {
    for (Eigen::Index k = 0; k < Ki; ++k) {
      // Only row k changes below, so these norms stay current for source k.
      phi.setZero();
      for (std::size_t f = 0; f < F; ++f) phi += y[f].row(k).cwiseAbs2().transpose();
      for (Eigen::Index n = 0; n < N; ++n) phi(n) = 1.0 / (2.0 * std::max(std::sqrt(phi(n)), cfg.weight_floor));

      for (std::size_t f = 0; f < F; ++f) {
        v.noalias() = (x[f] * phi.asDiagonal()) * x[f].adjoint();
        v /= static_cast<double>(N);
        const CMatrix wv = w[f] * v;
        Eigen::PartialPivLU<CMatrix> lu(wv);
        const double rcond = lu.rcond();
        if (!(rcond > cfg.singular_rcond))
          throw Error(ErrorCode::SingularCovariance, "weighted covariance for source " + std::to_string(k) + " at frequency " +
                                                         std::to_string(f) + " is singular (rcond " + std::to_string(rcond) + ")");
        CVector e = CVector::Zero(Ki);
        e(k) = 1.0;
        CVector wk = lu.solve(e);
        const double denom = std::sqrt(std::max((wk.adjoint() * v * wk)(0, 0).real(), 0.0));
        if (!(denom > 0.0))
          throw Error(ErrorCode::SingularCovariance, "zero weighted variance for source " + std::to_string(k) + " at frequency " +
                                                         std::to_string(f));
        wk /= denom;
        w[f].row(k) = wk.adjoint();
        y[f].row(k) = w[f].row(k) * x[f];
      }
    }
    result.objective_trace.push_back(detail::auxiva_objective(w, y));
    if (on_iteration) on_iteration(it + 1, result.objective_trace.back());
  }

  result.demixing = DemixingSet(std::move(w));
  result.sources = TensorSpectrogram(K, F, mix.frames());
  for (std::size_t f = 0; f < F; ++f) result.sources.set_frequency_slice(f, y[f]);
  return result;
}

}  // namespace gmdp
