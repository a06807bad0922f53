#pragma once

// Dense kernels shared by the criteria: centred Gram matrices, a pivot-checked
// Cholesky factor, F quantiles and the Monte Carlo prior sample.

#include <cstdint>
#include <optional>

#include "rsdesign/model.hpp"

namespace rsd {

/// Relative pivot tolerance used to declare a matrix singular.
inline constexpr double kSingularTol = 1e-10;

/// X^T (I - J/n) X, symmetrised.
Matrix centered_info(const Matrix &x);

/// X^T (I - J/n) Y.
Matrix centered_cross(const Matrix &x, const Matrix &y);

/// Cholesky factor of a symmetric positive-definite matrix.
class SpdFactor {
public:
  /// Returns nullopt when some pivot is <= tol * max(diag(a)) (or the
  /// matrix has a non-positive diagonal).
  static std::optional<SpdFactor> factor(const Matrix &a, double tol = kSingularTol);

  Eigen::Index dim() const { return lower_.rows(); }
  double log_det() const;
  Matrix inverse() const;
  Matrix solve(const Matrix &rhs) const;
  /// Diagonal of the inverse.
  Vector inverse_diagonal() const;
  const Matrix &lower() const { return lower_; }

private:
  explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

/// Quantile of the F(df1, df2) distribution, obtained by inverting the
/// regularised incomplete beta function I_x(df1/2, df2/2).
/// Throws std::domain_error unless df1, df2 >= 1 and 0 < prob < 1.
double f_quantile(int df1, int df2, double prob);

/// CDF of the F(df1, df2) distribution.
double f_cdf(double x, int df1, int df2);

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based stream: the i-th output is mix64(key + i * golden_gamma),
/// i.e. SplitMix64 addressed by position. Copies are independent.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  /// Uniform integer in [0, bound) by rejection, bound >= 1.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal by inverse-CDF transform of uniform().
  double normal();

  std::uint64_t key() const { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Key for an independent sub-stream (restart r, prior sample, ...).
std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream);

/// Stream ids used with derive_key.
inline constexpr std::uint64_t kPriorStream = 0xA11A5ull;
inline std::uint64_t restart_stream(std::uint64_t r) { return r + 1; }

/// B draws of beta_2 / sigma ~ N(0, tau2 I_q), one per row.
struct PriorSample {
  Matrix draws; // B x q
  double tau2 = 1.0;
  std::uint64_t seed = 0;

  Eigen::Index count() const { return draws.rows(); }
  Eigen::Index dim() const { return draws.cols(); }
};

/// Draws are generated row-major from CounterRng(derive_key(seed, kPriorStream))
/// using the inverse-normal transform, then scaled by sqrt(tau2).
PriorSample sample_prior(int q, double tau2, int draws, std::uint64_t seed);

} // namespace rsd
