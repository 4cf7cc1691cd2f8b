#pragma once
// Shared domain types for frequency-domain source separation and scaling.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmdp {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class ErrorCode {
  ShapeMismatch,
  NonFiniteEntry,
  SignalTooShort,
  SingularCovariance,
  SingularDemixing,
  InvalidExponent,
  InvalidConfig,
  ZeroReference,
  DegenerateSpan,
  IoError,
  ConfigError,
  MissingReference,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularDemixing: return "SingularDemixing";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingReference: return "MissingReference";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}
  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix, for re-raising with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Complex F x N time-frequency matrix, indexed (frequency, frame).
///
/// Finiteness is not enforced at construction so that corrupted inputs can be
/// represented and rejected by validate().
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t n_freq, std::size_t n_frames) : data_(CMatrix::Zero(as_index(n_freq), as_index(n_frames))) {
    if (n_freq == 0 || n_frames == 0) throw Error(ErrorCode::ShapeMismatch, "spectrogram needs F >= 1 and N >= 1");
  }
  explicit Spectrogram(CMatrix data) : data_(std::move(data)) {
    if (data_.rows() == 0 || data_.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "spectrogram needs F >= 1 and N >= 1");
  }

  std::size_t freqs() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t frames() const noexcept { return static_cast<std::size_t>(data_.cols()); }

  cplx& operator()(std::size_t f, std::size_t n) { return data_(as_index(f), as_index(n)); }
  const cplx& operator()(std::size_t f, std::size_t n) const { return data_(as_index(f), as_index(n)); }

  const CMatrix& matrix() const noexcept { return data_; }
  CMatrix& matrix() noexcept { return data_; }

  bool all_finite() const { return data_.allFinite(); }

  void validate() const {
    if (data_.rows() == 0 || data_.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "empty spectrogram");
    if (!all_finite()) throw Error(ErrorCode::NonFiniteEntry, "spectrogram contains NaN or Inf");
  }

  friend bool operator==(const Spectrogram& a, const Spectrogram& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  static Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }
  CMatrix data_;
};

/// Succeeds iff both spectrograms share (F, N) and hold only finite entries.
inline void validate_compatible(const Spectrogram& a, const Spectrogram& b) {
  if (a.freqs() != b.freqs() || a.frames() != b.frames()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(a.freqs()) + "x" + std::to_string(a.frames()) + " vs " +
                                              std::to_string(b.freqs()) + "x" + std::to_string(b.frames()));
  }
  a.validate();
  b.validate();
}

/// Ordered stack of channels sharing (F, N): microphones, sources, or images.
class TensorSpectrogram {
 public:
  TensorSpectrogram() = default;
  TensorSpectrogram(std::size_t channels, std::size_t n_freq, std::size_t n_frames) {
    if (channels == 0) throw Error(ErrorCode::ShapeMismatch, "tensor spectrogram needs at least one channel");
    channels_.assign(channels, Spectrogram(n_freq, n_frames));
  }
  explicit TensorSpectrogram(std::vector<Spectrogram> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) throw Error(ErrorCode::ShapeMismatch, "tensor spectrogram needs at least one channel");
    for (const auto& c : channels_) {
      if (c.freqs() != channels_.front().freqs() || c.frames() != channels_.front().frames())
        throw Error(ErrorCode::ShapeMismatch, "channels of a tensor spectrogram must share F and N");
    }
  }

  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t freqs() const noexcept { return channels_.empty() ? 0 : channels_.front().freqs(); }
  std::size_t frames() const noexcept { return channels_.empty() ? 0 : channels_.front().frames(); }

  Spectrogram& channel(std::size_t c) { return channels_.at(c); }
  const Spectrogram& channel(std::size_t c) const { return channels_.at(c); }
  std::span<const Spectrogram> all() const noexcept { return channels_; }

  /// Column vector of all channels at bin (f, n).
  CVector at(std::size_t f, std::size_t n) const {
    CVector v(static_cast<Eigen::Index>(channels_.size()));
    for (std::size_t c = 0; c < channels_.size(); ++c) v(static_cast<Eigen::Index>(c)) = channels_[c](f, n);
    return v;
  }

  /// channels x frames matrix for one frequency bin.
  CMatrix frequency_slice(std::size_t f) const {
    CMatrix out(static_cast<Eigen::Index>(channels()), static_cast<Eigen::Index>(frames()));
    for (std::size_t c = 0; c < channels(); ++c) out.row(static_cast<Eigen::Index>(c)) = channels_[c].matrix().row(static_cast<Eigen::Index>(f));
    return out;
  }

  void set_frequency_slice(std::size_t f, const CMatrix& slice) {
    for (std::size_t c = 0; c < channels(); ++c) channels_[c].matrix().row(static_cast<Eigen::Index>(f)) = slice.row(static_cast<Eigen::Index>(c));
  }

  void validate() const {
    if (channels_.empty()) throw Error(ErrorCode::ShapeMismatch, "tensor spectrogram has no channels");
    for (const auto& c : channels_) validate_compatible(channels_.front(), c);
  }

  friend bool operator==(const TensorSpectrogram& a, const TensorSpectrogram& b) { return a.channels_ == b.channels_; }

 private:
  std::vector<Spectrogram> channels_;
};

/// Per-frequency square demixing matrices W_f with y_fn = W_f x_fn.
class DemixingSet {
 public:
  static constexpr double kConditionBound = 1e8;

  DemixingSet() = default;
  explicit DemixingSet(std::vector<CMatrix> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.empty()) throw Error(ErrorCode::ShapeMismatch, "demixing set needs at least one frequency");
    const auto k = matrices_.front().rows();
    for (const auto& w : matrices_) {
      if (w.rows() != k || w.cols() != k || k == 0) throw Error(ErrorCode::ShapeMismatch, "demixing matrices must be square and share size");
      if (!w.allFinite()) throw Error(ErrorCode::NonFiniteEntry, "demixing matrix contains NaN or Inf");
    }
  }
  static DemixingSet identity(std::size_t n_freq, std::size_t k) {
    return DemixingSet(std::vector<CMatrix>(n_freq, CMatrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
  }

  std::size_t freqs() const noexcept { return matrices_.size(); }
  std::size_t sources() const noexcept { return matrices_.empty() ? 0 : static_cast<std::size_t>(matrices_.front().rows()); }
  const CMatrix& operator[](std::size_t f) const { return matrices_.at(f); }
  CMatrix& operator[](std::size_t f) { return matrices_.at(f); }

  /// 2-norm condition number of W_f.
  double condition_number(std::size_t f) const {
    Eigen::JacobiSVD<CMatrix> svd(matrices_.at(f));
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  }

  /// Diagnostic: throws SingularDemixing for the first W_f above the condition bound.
  void check_conditioning(double bound = kConditionBound) const {
    for (std::size_t f = 0; f < matrices_.size(); ++f) {
      const double c = condition_number(f);
      if (!(c <= bound))
        throw Error(ErrorCode::SingularDemixing, "W_f at f=" + std::to_string(f) + " has condition number " + std::to_string(c));
    }
  }

 private:
  std::vector<CMatrix> matrices_;
};

/// Per-frequency complex coefficients mapping a separated source to one microphone.
using ScalingVector = CVector;

/// Exponents and IRLS controls for the mixed-norm scaling solver.
struct MixedNormParams {
  double p = 1.0;
  double q = 2.0;
  int max_iters = 100;
  double rel_tol = 0.01;
  double floor = 1e-10;  // relative to the RMS of the microphone spectrogram

  void validate() const {
    if (!(p > 0.0) || !(q > 0.0) || !(p <= q) || !(q <= 2.0) || !std::isfinite(p) || !std::isfinite(q))
      throw Error(ErrorCode::InvalidExponent, "need 0 < p <= q <= 2, got p=" + std::to_string(p) + " q=" + std::to_string(q));
    if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "rel_tol must be > 0");
    if (!(floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "floor must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Binary container: 8 magic bytes, F and N as uint64 little-endian, then F*N
// (re, im) double pairs in row-major (f outer, n inner) order.

inline constexpr char kSpectrogramMagic[8] = {'G', 'M', 'D', 'P', 'S', 'P', 'C', '1'};
inline constexpr char kTensorMagic[8] = {'G', 'M', 'D', 'P', 'T', 'S', 'R', '1'};

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error(ErrorCode::IoError, "truncated spectrogram stream");
  return value;
}

inline void expect_magic(std::istream& is, const char (&magic)[8]) {
  char buf[8];
  is.read(buf, 8);
  if (!is || !std::equal(buf, buf + 8, magic)) throw Error(ErrorCode::IoError, "bad magic bytes in spectrogram stream");
}

}  // namespace detail

inline void write_spectrogram(std::ostream& os, const Spectrogram& s) {
  s.validate();
  os.write(kSpectrogramMagic, 8);
  detail::write_le<std::uint64_t>(os, s.freqs());
  detail::write_le<std::uint64_t>(os, s.frames());
  for (std::size_t f = 0; f < s.freqs(); ++f) {
    for (std::size_t n = 0; n < s.frames(); ++n) {
      detail::write_le(os, s(f, n).real());
      detail::write_le(os, s(f, n).imag());
    }
  }
  if (!os) throw Error(ErrorCode::IoError, "failed writing spectrogram");
}

inline Spectrogram read_spectrogram(std::istream& is) {
  detail::expect_magic(is, kSpectrogramMagic);
  const auto n_freq = detail::read_le<std::uint64_t>(is);
  const auto n_frames = detail::read_le<std::uint64_t>(is);
  if (n_freq == 0 || n_frames == 0 || n_freq > (1u << 24) || n_frames > (1u << 28))
    throw Error(ErrorCode::IoError, "implausible spectrogram shape in stream");
  Spectrogram s(n_freq, n_frames);
  for (std::size_t f = 0; f < n_freq; ++f) {
    for (std::size_t n = 0; n < n_frames; ++n) {
      const double re = detail::read_le<double>(is);
      const double im = detail::read_le<double>(is);
      s(f, n) = {re, im};
    }
  }
  s.validate();
  return s;
}

inline void write_tensor(std::ostream& os, const TensorSpectrogram& t) {
  os.write(kTensorMagic, 8);
  detail::write_le<std::uint64_t>(os, t.channels());
  for (const auto& c : t.all()) write_spectrogram(os, c);
}

inline TensorSpectrogram read_tensor(std::istream& is) {
  detail::expect_magic(is, kTensorMagic);
  const auto count = detail::read_le<std::uint64_t>(is);
  if (count == 0 || count > 4096) throw Error(ErrorCode::IoError, "implausible channel count in stream");
  std::vector<Spectrogram> channels;
  for (std::uint64_t c = 0; c < count; ++c) channels.push_back(read_spectrogram(is));
  return TensorSpectrogram(std::move(channels));
}

inline void save_tensor(const std::string& path, const TensorSpectrogram& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_tensor(os, t);
}

inline TensorSpectrogram load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_tensor(is);
}

}  // namespace gmdp
