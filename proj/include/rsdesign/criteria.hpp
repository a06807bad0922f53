#pragma once

// Individual design criteria and the weighted compound objectives.
//
// sigma^2 is fixed to 1 throughout. Every failure mode (singular information
// matrix, no pure-error degrees of freedom) maps to +infinity.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsdesign/model.hpp"
#include "rsdesign/numeric.hpp"

namespace rsd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// MSE.D: determinant family, Monte Carlo expectation of the log MSE determinant.
/// MSE.P: determinant family, point prior beta_2 = tau * 1_q.
/// MSE.L: trace family.
enum class Family { mse_d, mse_p, mse_l };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
inline bool is_determinant(Family f) { return f != Family::mse_l; }

/// Weights of the inference, lack-of-fit and MSE components.
struct Kappa {
  double primary = 1.0 / 3.0;
  double lof = 1.0 / 3.0;
  double mse = 1.0 / 3.0;
};

struct CriterionConfig {
  Family family = Family::mse_d;
  Kappa kappa;
  double tau2 = 1.0;
  double alpha = 0.05;
  double alpha_lof = 0.05;
  int mc_samples = 50;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct ExperimentSpec {
  FactorGrid grid;
  int runs = 0;
  TermSet primary;
  TermSet potential;
  CriterionConfig criterion;

  int p() const { return static_cast<int>(primary.size()); }
  int q() const { return static_cast<int>(potential.size()); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Individual criteria, as defined on their natural scale.

/// |M^-1|, +inf if M is singular.
double phi_ds(const Matrix &info);
/// sum_j w_j (M^-1)_jj.
double phi_l(const Matrix &info, const Vector &weights);
/// F_{p,d;1-alpha}^p * phi_ds.
double phi_dp(double phi_ds_value, int p, int pe_df, double alpha);
/// F_{1,d;1-alpha} * phi_l.
double phi_lp(double phi_l_value, int pe_df, double alpha);

/// X2^T (I - H) X2 with H the hat matrix of [1 | X1]; nullopt if [1 | X1]
/// is rank deficient.
std::optional<Matrix> residual_potential_gram(const Matrix &x1, const Matrix &x2);

/// F_{q,d;1-alpha_L}^q |R + I/tau2|^-1; 1 when q = 0.
double phi_lof_dp(const Matrix &resid, int pe_df, double alpha_lof, double tau2);
/// F_{1,d;1-alpha_L} sum_j w_j [(R + I/tau2)^-1]_jj; 1 when q = 0.
double phi_lof_lp(const Matrix &resid, const Vector &weights, int pe_df, double alpha_lof,
                  double tau2);

/// M^-1 X1^T (I - J/n) X2; nullopt if M is singular.
std::optional<Matrix> alias_matrix(const Matrix &x1, const Matrix &x2);

/// exp{ log|M^-1| + mean_b log(1 + beta_b^T C beta_b) } with
/// C = A1^T M A1 = X2^T(I-J/n)X1 M^-1 X1^T(I-J/n)X2.
double phi_mse_d_mc(const Matrix &info, const Matrix &x1, const Matrix &x2,
                    const PriorSample &prior);
/// As phi_mse_d_mc with the single draw beta_2 = tau * 1_q.
double phi_mse_d_point(const Matrix &info, const Matrix &x1, const Matrix &x2, double tau2);
/// sum_j w_j (M^-1)_jj + tau2 sum_j w_j (A1 A1^T)_jj.
double phi_mse_l(const Matrix &info, const Matrix &x1, const Matrix &x2, const Vector &weights,
                 double tau2);

// ---------------------------------------------------------------------------
// Compound objective.

/// Centred second-moment blocks of [X1 | X2]; everything the criteria need.
struct CenteredBlocks {
  Matrix info;      // X1^T (I - J/n) X1, p x p
  Matrix cross;     // X1^T (I - J/n) X2, p x q
  Matrix potential; // X2^T (I - J/n) X2, q x q
};

CenteredBlocks centered_blocks(const Matrix &x1, const Matrix &x2);
/// From the raw Gram matrix of [1 | X1 | X2].
CenteredBlocks centered_blocks_from_gram(const Matrix &gram, int p, int q);

/// Component values of one design. For the determinant family the values are
/// per-parameter geometric means: phi_primary = phi_dp^(1/p),
/// phi_lof = phi_lof_dp^(1/q), phi_mse = phi_mse_d^(1/p) and
/// phi_base = phi_ds^(1/p). The trace family reports the criteria directly.
/// Components that were not evaluated hold NaN.
struct CriterionBreakdown {
  Family family = Family::mse_d;
  double phi_base = kInf;
  double phi_primary = kInf;
  double phi_lof = kInf;
  double phi_mse = kInf;
  int treatments = 0;
  int pe_df = 0;
  int lof_df = 0;
  double log_compound = kInf;

  double compound() const { return std::exp(log_compound); }
};

/// Evaluates the configured compound criterion. Holds precomputed F-quantile
/// tables and a shared prior sample; safe to use concurrently.
class CompoundEvaluator {
public:
  CompoundEvaluator(const ExperimentSpec &spec, PriorSample prior);

  const ExperimentSpec &spec() const { return spec_; }
  const PriorSample &prior() const { return prior_; }

  /// Full evaluation from the design. With `all_components` false, components
  /// with zero weight are skipped and left as NaN.
  CriterionBreakdown evaluate(const Design &design, bool all_components = true) const;

  CriterionBreakdown evaluate(const CenteredBlocks &blocks, int treatments,
                              bool all_components = true) const;

private:
  double log_quantile(const std::vector<double> &table, int pe_df) const;

  ExperimentSpec spec_;
  PriorSample prior_;
  Vector primary_weights_;
  Vector potential_weights_;
  // log F quantiles indexed by pure-error df (index 0 unused)
  std::vector<double> log_f_primary_; // F_{p,d} (det) or F_{1,d} (trace)
  std::vector<double> log_f_lof_;     // F_{q,d} (det) or F_{1,d} (trace)
};

/// Prior sample implied by an experiment and master seed (empty for MSE.P / MSE.L).
PriorSample prior_for(const ExperimentSpec &spec, std::uint64_t seed);

CriterionBreakdown compound_objective(const Design &design, const ExperimentSpec &spec,
                                      const PriorSample &prior);

// ---------------------------------------------------------------------------
// Efficiencies.

/// 100 * reference / value; 0 when value is +inf; nullopt when value is 0
/// or the reference is not finite.
std::optional<double> efficiency(double reference, double value);

struct EfficiencyRow {
  Kappa kappa;
  std::optional<double> primary;
  std::optional<double> lof;
  std::optional<double> mse;
  int pe_df = 0;
  int lof_df = 0;
};

/// Efficiency of every breakdown relative to the three reference breakdowns
/// (the pure-criterion designs). Throws if a reference index is out of range.
std::vector<EfficiencyRow> efficiency_report(const std::vector<Kappa> &kappas,
                                             const std::vector<CriterionBreakdown> &values,
                                             std::size_t ref_primary, std::size_t ref_lof,
                                             std::size_t ref_mse);

} // namespace rsd
