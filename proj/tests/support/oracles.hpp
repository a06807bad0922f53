#pragma once

// Brute-force reference implementations used by the tests. Nothing here calls
// into the library's numeric kernels: determinants and inverses go through
// Eigen's full-pivot LU on explicit n x n projectors, and F quantiles come
// from a hand-written incomplete beta function.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// xorshift64* with Box-Muller normals; deliberately unrelated to the
// library's generator.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : s_(seed * 2685821657736338717ull + 0x1234567ull) {
    if (s_ == 0)
      s_ = 88172645463325252ull;
  }
  std::uint64_t bits() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 2685821657736338717ull;
  }
  double uniform() { return (static_cast<double>(bits() >> 11) + 0.5) / 9007199254740992.0; }
  int integer(int lo, int hi) { // inclusive
    return lo + static_cast<int>(bits() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double normal() {
    const double u = uniform(), v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }
  Matrix normal_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i)
        m(i, j) = normal();
    return m;
  }

private:
  std::uint64_t s_;
};

// ---------------------------------------------------------------------------
// Regularised incomplete beta by the modified Lentz continued fraction.

inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny)
    d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny)
      d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny)
      d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15)
      return h;
  }
  throw std::runtime_error("beta_cf did not converge");
}

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

inline double f_cdf(double f, int d1, int d2) {
  if (f <= 0.0)
    return 0.0;
  const double x = d1 * f / (d1 * f + d2);
  return incomplete_beta(0.5 * d1, 0.5 * d2, x);
}

/// Bisection of the F CDF; brackets by doubling.
inline double f_quantile(int d1, int d2, double prob) {
  double lo = 0.0, hi = 1.0;
  while (f_cdf(hi, d1, d2) < prob)
    hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, d1, d2) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Dense criteria on explicit projectors.

inline Matrix centering(int n) {
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

inline Matrix inverse(const Matrix &a) { return a.fullPivLu().inverse(); }
inline double det(const Matrix &a) { return a.fullPivLu().determinant(); }

inline Matrix info(const Matrix &x1) {
  return x1.transpose() * centering(static_cast<int>(x1.rows())) * x1;
}

inline Matrix alias(const Matrix &x1, const Matrix &x2) {
  return inverse(info(x1)) * x1.transpose() * centering(static_cast<int>(x1.rows())) * x2;
}

/// X2^T (I - H) X2 with H the hat matrix of [1 | X1].
inline Matrix residual(const Matrix &x1, const Matrix &x2) {
  const auto n = x1.rows();
  Matrix x(n, x1.cols() + 1);
  x << Vector::Ones(n), x1;
  const Matrix hat = x * inverse(x.transpose() * x) * x.transpose();
  return x2.transpose() * (Matrix::Identity(n, n) - hat) * x2;
}

inline double phi_ds(const Matrix &x1) { return 1.0 / det(info(x1)); }

inline double phi_l(const Matrix &x1, const Vector &w) {
  return w.dot(inverse(info(x1)).diagonal());
}

inline double phi_dp(const Matrix &x1, int pe_df, double alpha) {
  const int p = static_cast<int>(x1.cols());
  return std::pow(f_quantile(p, pe_df, 1.0 - alpha), p) * phi_ds(x1);
}

inline double phi_lp(const Matrix &x1, const Vector &w, int pe_df, double alpha) {
  return f_quantile(1, pe_df, 1.0 - alpha) * phi_l(x1, w);
}

inline Matrix posterior_precision(const Matrix &x1, const Matrix &x2, double tau2) {
  const auto q = x2.cols();
  return residual(x1, x2) + Matrix::Identity(q, q) / tau2;
}

inline double phi_lof_dp(const Matrix &x1, const Matrix &x2, int pe_df, double alpha,
                         double tau2) {
  const int q = static_cast<int>(x2.cols());
  return std::pow(f_quantile(q, pe_df, 1.0 - alpha), q) /
         det(posterior_precision(x1, x2, tau2));
}

inline double phi_lof_lp(const Matrix &x1, const Matrix &x2, const Vector &w, int pe_df,
                         double alpha, double tau2) {
  return f_quantile(1, pe_df, 1.0 - alpha) *
         w.dot(inverse(posterior_precision(x1, x2, tau2)).diagonal());
}

/// |M^-1 + A b b^T A^T| computed directly, no determinant lemma.
inline double mse_det(const Matrix &x1, const Matrix &x2, const Vector &beta) {
  const Matrix a = alias(x1, x2);
  const Vector bias = a * beta;
  return det(inverse(info(x1)) + bias * bias.transpose());
}

/// exp(mean_b log |M^-1 + A b b^T A^T|) over the rows of `draws`.
inline double phi_mse_d(const Matrix &x1, const Matrix &x2, const Matrix &draws) {
  double acc = 0.0;
  for (Eigen::Index b = 0; b < draws.rows(); ++b)
    acc += std::log(mse_det(x1, x2, draws.row(b).transpose()));
  return std::exp(acc / static_cast<double>(draws.rows()));
}

inline double phi_mse_l(const Matrix &x1, const Matrix &x2, const Vector &w, double tau2) {
  const Matrix a = alias(x1, x2);
  const Matrix mse = inverse(info(x1)) + tau2 * a * a.transpose();
  return w.dot(mse.diagonal());
}

inline double rel_err(double a, double b) {
  if (a == b)
    return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

} // namespace oracle
