#pragma once

// Factors, polynomial term sets and designs for response-surface models.
//
// A design stores grid indices rather than real settings, so treatment
// identity is an exact integer comparison.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rsd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Equally spaced level grid on [-1, 1] for each factor.
class FactorGrid {
public:
  FactorGrid() = default;
  /// Throws std::invalid_argument if any factor has fewer than 2 levels.
  explicit FactorGrid(std::vector<int> levels_per_factor);
  FactorGrid(int factors, int levels);

  int factors() const { return static_cast<int>(levels_.size()); }
  int levels(int factor) const { return levels_[static_cast<std::size_t>(factor)]; }
  const std::vector<int> &levels_per_factor() const { return levels_; }

  double value(int factor, int index) const;
  const std::vector<double> &settings(int factor) const {
    return values_[static_cast<std::size_t>(factor)];
  }

  /// Grid index of a real setting, or -1 when it is not within `tol` of a level.
  int index_of(int factor, double setting, double tol = 1e-6) const;

  /// Product of the level counts.
  std::uint64_t combinations() const;

private:
  std::vector<int> levels_;
  std::vector<std::vector<double>> values_;
};

/// Monomial x_1^e_1 ... x_k^e_k with an inference weight.
struct Term {
  std::vector<int> exponents;
  double weight = 1.0;

  int degree() const;
  bool is_pure_quadratic() const;
  std::string name() const;

  /// Term with the default weight (0.25 for pure quadratics, else 1).
  static Term with_default_weight(std::vector<int> exponents);
};

enum class TermRole { primary, potential };

class TermSet {
public:
  TermSet() = default;
  /// Validates exponent lengths, degree >= 1, positive weights and uniqueness.
  TermSet(std::vector<Term> terms, TermRole role, int factors);

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const Term &operator[](std::size_t i) const { return terms_[i]; }
  const std::vector<Term> &terms() const { return terms_; }
  TermRole role() const { return role_; }
  Vector weights() const;

  bool contains(const std::vector<int> &exponents) const;

private:
  std::vector<Term> terms_;
  TermRole role_ = TermRole::primary;
};

/// Throws std::invalid_argument if the sets share an exponent vector.
void require_disjoint(const TermSet &primary, const TermSet &potential);

/// Preset term lists: main_effects, quadratic_terms, linear_interactions,
/// second_order, cubic_terms, third_order_terms. Terms are ordered by total
/// degree, then by exponent vector with factor 1 most significant and higher
/// exponents first (x1 before x2, x1^2 before x1*x2).
std::vector<Term> expand_preset(std::string_view preset, int factors);

/// Union of several presets, re-sorted into the canonical order.
/// Throws if two presets contribute the same term.
std::vector<Term> expand_presets(std::span<const std::string> presets, int factors);

bool canonical_term_less(const Term &a, const Term &b);

/// n x k matrix of grid indices.
class Design {
public:
  Design() = default;
  Design(int runs, int factors) : runs_(runs), factors_(factors),
    idx_(static_cast<std::size_t>(runs) * static_cast<std::size_t>(factors), 0) {}

  int runs() const { return runs_; }
  int factors() const { return factors_; }

  int &at(int row, int factor) {
    return idx_[static_cast<std::size_t>(row) * static_cast<std::size_t>(factors_) +
                static_cast<std::size_t>(factor)];
  }
  int at(int row, int factor) const {
    return idx_[static_cast<std::size_t>(row) * static_cast<std::size_t>(factors_) +
                static_cast<std::size_t>(factor)];
  }
  std::span<const int> row(int i) const {
    return {idx_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(factors_),
            static_cast<std::size_t>(factors_)};
  }
  void set_row(int i, std::span<const int> settings);

  bool valid_for(const FactorGrid &grid) const;

  friend bool operator==(const Design &, const Design &) = default;

private:
  int runs_ = 0;
  int factors_ = 0;
  std::vector<int> idx_;
};

double term_value(const Term &term, std::span<const int> row, const FactorGrid &grid);

/// Column of term values over the design rows.
Vector evaluate_term(const Term &term, const Design &design, const FactorGrid &grid);

struct ModelMatrices {
  Matrix primary;   // n x p, no intercept column
  Matrix potential; // n x q
};

ModelMatrices model_matrices(const Design &design, const TermSet &primary,
                             const TermSet &potential, const FactorGrid &grid);

/// 1-based label in the full-factorial enumeration, factor k varying fastest.
std::uint64_t treatment_label(std::span<const int> row, const FactorGrid &grid);

/// Inverse of treatment_label.
std::vector<int> treatment_of_label(std::uint64_t label, const FactorGrid &grid);

struct ReplicationSummary {
  int treatments = 0;   // t
  int pure_error_df = 0;  // n - t
  int lack_of_fit_df = 0; // max(t - p - 1, 0)
  std::vector<std::uint64_t> labels;
};

ReplicationSummary replication_summary(const Design &design, const FactorGrid &grid,
                                       int primary_terms);

/// Row order for presentation: by treatment label, then by original index.
std::vector<int> presentation_order(const Design &design, const FactorGrid &grid);

} // namespace rsd
