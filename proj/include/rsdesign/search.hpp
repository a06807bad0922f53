#pragma once

// Point exchange, coordinate exchange and seeded multi-start search.

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rsdesign/criteria.hpp"

namespace rsd {

/// Full factorial over the grid, in treatment-label order.
struct CandidateSet {
  FactorGrid grid;
  std::vector<std::vector<int>> rows;

  std::size_t size() const { return rows.size(); }
};

inline constexpr std::uint64_t kDefaultCandidateCap = 1'000'000;

/// Throws std::length_error if the full factorial exceeds `cap` rows.
CandidateSet build_candidates(const FactorGrid &grid, std::uint64_t cap = kDefaultCandidateCap);

/// n runs drawn uniformly with replacement from the full factorial.
Design random_start(const FactorGrid &grid, int runs, CounterRng &rng);
Design random_start(const CandidateSet &candidates, int runs, CounterRng &rng);

/// Objective seen by the exchange algorithms: a current design plus the
/// ability to score single-row replacements. Smaller is better; failures are
/// +inf.
class ExchangeObjective {
public:
  virtual ~ExchangeObjective() = default;
  virtual double reset(const Design &design) = 0;
  /// Value of the current design with `row` replaced by `settings`.
  virtual double trial(int row, std::span<const int> settings) = 0;
  /// Replace the row and return the new current value.
  virtual double commit(int row, std::span<const int> settings) = 0;
  virtual const Design &design() const = 0;
};

/// Full re-evaluation of an arbitrary design functional.
class FunctionObjective final : public ExchangeObjective {
public:
  explicit FunctionObjective(std::function<double(const Design &)> fn) : fn_(std::move(fn)) {}

  double reset(const Design &design) override;
  double trial(int row, std::span<const int> settings) override;
  double commit(int row, std::span<const int> settings) override;
  const Design &design() const override { return current_; }

private:
  std::function<double(const Design &)> fn_;
  Design current_;
  Design scratch_;
};

/// Compound criterion with rank-two updates of the Gram matrix of
/// [1 | X1 | X2] for trial swaps. Committed states are rebuilt from scratch.
class CompoundObjective final : public ExchangeObjective {
public:
  explicit CompoundObjective(const CompoundEvaluator &evaluator) : eval_(&evaluator) {}

  double reset(const Design &design) override;
  double trial(int row, std::span<const int> settings) override;
  double commit(int row, std::span<const int> settings) override;
  const Design &design() const override { return current_; }

private:
  Vector features(std::span<const int> settings) const;
  void rebuild();

  const CompoundEvaluator *eval_;
  Design current_;
  Matrix features_; // n x (1 + p + q)
  Matrix gram_;
  std::unordered_map<std::uint64_t, int> counts_;
  std::vector<std::uint64_t> labels_;
  double value_ = kInf;
};

struct ExchangeOptions {
  int max_passes = 50;
  double rel_tol = 1e-9;
};

struct ExchangeResult {
  Design design;
  double value = kInf;
  int passes = 0;
  bool converged = false;
  /// Objective after every accepted exchange, starting with the initial value.
  std::vector<double> history;
};

/// True when `candidate` beats `current` by more than the relative tolerance.
bool strictly_improves(double candidate, double current, double rel_tol);

/// Best-improvement row exchange against the candidate list, rows in index
/// order, candidates in label order; stops after a pass with no change.
ExchangeResult point_exchange(const Design &start, const CandidateSet &candidates,
                              ExchangeObjective &objective, const ExchangeOptions &options = {});
ExchangeResult point_exchange(const Design &start, const CandidateSet &candidates,
                              std::function<double(const Design &)> objective,
                              const ExchangeOptions &options = {});

/// Best-improvement single-coordinate exchange over every level of every
/// factor of every run.
ExchangeResult coordinate_exchange(const Design &start, const FactorGrid &grid,
                                   ExchangeObjective &objective,
                                   const ExchangeOptions &options = {});
ExchangeResult coordinate_exchange(const Design &start, const FactorGrid &grid,
                                   std::function<double(const Design &)> objective,
                                   const ExchangeOptions &options = {});

enum class Algorithm { ptex, coordex };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
/// Point exchange for k <= 4, coordinate exchange otherwise.
Algorithm default_algorithm(int factors);

struct SearchOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  int workers = 1; // 0: hardware concurrency
  std::optional<Algorithm> algorithm;
  ExchangeOptions exchange;
  std::uint64_t candidate_cap = kDefaultCandidateCap;
};

struct RestartOutcome {
  double value = kInf;
  int passes = 0;
  bool converged = false;
};

struct SearchResult {
  Design design; // rows in presentation order (treatment label, then run index)
  std::vector<std::uint64_t> labels;
  ModelMatrices matrices;
  CriterionBreakdown breakdown;
  double compound_value = kInf;
  std::vector<double> path;
  std::vector<RestartOutcome> restarts;
  int best_restart = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::ptex;
  bool converged = true;
  double wall_seconds = 0.0;
};

/// Runs `restarts` independent exchange searches. Restart r draws its start
/// from CounterRng(derive_key(seed, r + 1)); the prior sample comes from the
/// same seed. Results do not depend on the worker count.
SearchResult multi_start(const ExperimentSpec &spec, const SearchOptions &options);
SearchResult multi_start(const CompoundEvaluator &evaluator, const SearchOptions &options);

} // namespace rsd
