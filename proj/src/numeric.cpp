#include "rsdesign/numeric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace rsd {

Matrix centered_info(const Matrix &x) {
  Matrix m = centered_cross(x, x);
  return 0.5 * (m + m.transpose());
}

Matrix centered_cross(const Matrix &x, const Matrix &y) {
  const double n = static_cast<double>(x.rows());
  const Vector sx = x.colwise().sum().transpose();
  const Vector sy = y.colwise().sum().transpose();
  return x.transpose() * y - (sx * sy.transpose()) / n;
}

std::optional<SpdFactor> SpdFactor::factor(const Matrix &a, double tol) {
  const Eigen::Index p = a.rows();
  if (p == 0)
    return SpdFactor(Matrix(0, 0));
  const double max_diag = a.diagonal().maxCoeff();
  if (!(max_diag > 0.0) || !std::isfinite(max_diag))
    return std::nullopt;
  const double floor = tol * max_diag;

  Matrix l = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > floor))
      return std::nullopt;
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Eigen::Index i = j + 1; i < p; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
  }
  return SpdFactor(std::move(l));
}

double SpdFactor::log_det() const { return 2.0 * lower_.diagonal().array().log().sum(); }

Matrix SpdFactor::solve(const Matrix &rhs) const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  Matrix y = l.solve(rhs);
  return l.transpose().solve(y);
}

Matrix SpdFactor::inverse() const {
  Matrix inv = solve(Matrix::Identity(dim(), dim()));
  return 0.5 * (inv + inv.transpose());
}

Vector SpdFactor::inverse_diagonal() const {
  // diag(A^-1)_i = || L^-1 e_i ||^2 summed over the columns of L^-T
  const Matrix linv = lower_.triangularView<Eigen::Lower>().solve(Matrix::Identity(dim(), dim()));
  return linv.colwise().squaredNorm().transpose();
}

double f_quantile(int df1, int df2, double prob) {
  if (df1 < 1 || df2 < 1)
    throw std::domain_error("F quantile needs df1, df2 >= 1");
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("F quantile needs 0 < prob < 1");
  const double a = 0.5 * df1, b = 0.5 * df2;
  const double x = boost::math::ibeta_inv(a, b, prob);
  if (x >= 1.0)
    return std::numeric_limits<double>::infinity();
  return (b * x) / (a * (1.0 - x));
}

double f_cdf(double x, int df1, int df2) {
  if (x <= 0.0)
    return 0.0;
  const double a = 0.5 * df1, b = 0.5 * df2;
  return boost::math::ibeta(a, b, df1 * x / (df1 * x + df2));
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % bound;
}

double CounterRng::normal() {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, uniform());
}

std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream * 0xD1B54A32D192ED03ull + 0x632BE59BD9B4E019ull));
}

PriorSample sample_prior(int q, double tau2, int draws, std::uint64_t seed) {
  if (q < 0 || draws < 1)
    throw std::invalid_argument("prior sample needs q >= 0 and at least one draw");
  if (!(tau2 >= 0.0))
    throw std::invalid_argument("tau2 must be non-negative");
  PriorSample s{Matrix(draws, q), tau2, seed};
  CounterRng rng(derive_key(seed, kPriorStream));
  const double scale = std::sqrt(tau2);
  for (int b = 0; b < draws; ++b)
    for (int j = 0; j < q; ++j)
      s.draws(b, j) = scale * rng.normal();
  return s;
}

} // namespace rsd
