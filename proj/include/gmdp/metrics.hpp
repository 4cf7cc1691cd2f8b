#pragma once
// Scale-invariant separation metrics with best-permutation alignment.

#include "gmdp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gmdp {

inline constexpr double kMetricCapDb = 300.0;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double ratio_db(double num, double den) {
  if (num <= 0.0) return -kMetricCapDb;
  if (den <= 0.0 || num / den > 1e30) return kMetricCapDb;
  if (num / den < 1e-30) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorCode::ShapeMismatch, "sequences must be non-empty and of equal length (" + std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()) + ")");
}

}  // namespace detail

/// SI-SDR in dB: project the estimate on the reference, compare target and
/// residual energies. Capped at +/-300 dB.
inline double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  detail::require_same_length(estimate, reference);
  const double ref_energy = detail::dot(reference, reference);
  if (!(ref_energy > 0.0)) throw Error(ErrorCode::ZeroReference, "reference signal is all zero");
  const double alpha = detail::dot(estimate, reference) / ref_energy;
  double target = 0.0, resid = 0.0;
  for (std::size_t t = 0; t < estimate.size(); ++t) {
    const double s = alpha * reference[t];
    target += s * s;
    const double d = estimate[t] - s;
    resid += d * d;
  }
  return detail::ratio_db(target, resid);
}

/// SI-SIR in dB. The target component is the projection of the estimate on
/// the target reference; the interference component is the projection of the
/// remaining residual onto the span of the interfering references.
inline double si_sir(std::span<const double> estimate, std::span<const double> target_reference,
                     const std::vector<std::span<const double>>& interference_references) {
  detail::require_same_length(estimate, target_reference);
  const double ref_energy = detail::dot(target_reference, target_reference);
  if (!(ref_energy > 0.0)) throw Error(ErrorCode::ZeroReference, "target reference is all zero");
  const double alpha = detail::dot(estimate, target_reference) / ref_energy;
  std::vector<double> resid(estimate.size());
  double target = 0.0;
  for (std::size_t t = 0; t < estimate.size(); ++t) {
    const double s = alpha * target_reference[t];
    target += s * s;
    resid[t] = estimate[t] - s;
  }
  if (interference_references.empty()) return kMetricCapDb;

  const auto J = static_cast<Eigen::Index>(interference_references.size());
  Eigen::MatrixXd gram(J, J);
  Eigen::VectorXd rhs(J);
  for (Eigen::Index i = 0; i < J; ++i) {
    const auto& a = interference_references[static_cast<std::size_t>(i)];
    detail::require_same_length(estimate, a);
    if (!(detail::dot(a, a) > 0.0)) throw Error(ErrorCode::ZeroReference, "interference reference is all zero");
    rhs(i) = detail::dot(a, resid);
    for (Eigen::Index j = 0; j < J; ++j) gram(i, j) = detail::dot(a, interference_references[static_cast<std::size_t>(j)]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12 || d.minCoeff() <= 1e-12 * d.maxCoeff())
    throw Error(ErrorCode::DegenerateSpan, "interference references are linearly dependent");
  const Eigen::VectorXd coef = ldlt.solve(rhs);
  // ||P r||^2 = c^T G c = c^T rhs
  const double interf = std::max(coef.dot(rhs), 0.0);
  return detail::ratio_db(target, interf);
}

/// Aligned metrics for K estimates against K references.
struct EvalReport {
  std::vector<double> si_sdr;            // indexed by estimate
  std::vector<double> si_sir;            // indexed by estimate
  std::vector<std::size_t> permutation;  // permutation[i] = reference matched to estimate i
  double mean_si_sdr = 0.0;
  double mean_si_sir = 0.0;
};

/// Picks the estimate-to-reference assignment maximizing mean SI-SDR by
/// exhaustive search (K <= 8).
inline EvalReport evaluate(const std::vector<std::vector<double>>& estimates, const std::vector<std::vector<double>>& references) {
  const std::size_t K = references.size();
  if (estimates.size() != K || K == 0)
    throw Error(ErrorCode::ShapeMismatch, "need the same non-zero number of estimates and references");
  if (K > 8) throw Error(ErrorCode::InvalidConfig, "exhaustive permutation search limited to 8 sources");
  for (std::size_t i = 0; i < K; ++i) {
    detail::require_same_length(estimates[i], references[0]);
    detail::require_same_length(references[i], references[0]);
  }

  std::vector<std::vector<double>> sdr(K, std::vector<double>(K));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) sdr[i][j] = si_sdr(estimates[i], references[j]);

  std::vector<std::size_t> perm(K), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double score = 0.0;
    for (std::size_t i = 0; i < K; ++i) score += sdr[i][perm[i]];
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  EvalReport rep;
  rep.permutation = best;
  for (std::size_t i = 0; i < K; ++i) {
    const std::size_t r = best[i];
    rep.si_sdr.push_back(sdr[i][r]);
    std::vector<std::span<const double>> interferers;
    for (std::size_t j = 0; j < K; ++j)
      if (j != r) interferers.emplace_back(references[j]);
    rep.si_sir.push_back(si_sir(estimates[i], references[r], interferers));
  }
  rep.mean_si_sdr = std::accumulate(rep.si_sdr.begin(), rep.si_sdr.end(), 0.0) / static_cast<double>(K);
  rep.mean_si_sir = std::accumulate(rep.si_sir.begin(), rep.si_sir.end(), 0.0) / static_cast<double>(K);
  return rep;
}

}  // namespace gmdp
