#pragma once
// Seeded generators shared by the test suites.

#include "gmdp/core.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace gmdp::tutil {

inline CMatrix random_cmatrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

/// Complex entries whose magnitudes are Laplacian-distributed: sparse-ish,
/// like speech spectrogram residuals.
inline CMatrix random_heavy_tailed(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * 3.141592653589793);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std::polar(e(rng) * e(rng), u(rng));
  return m;
}

inline std::vector<double> white_noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  const double d = b.norm();
  return d > 0.0 ? (a - b).norm() / d : (a - b).norm();
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace gmdp::tutil
