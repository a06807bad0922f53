#include "rsdesign/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <stdexcept>
#include <thread>

namespace rsd {

CandidateSet build_candidates(const FactorGrid &grid, std::uint64_t cap) {
  const std::uint64_t total = grid.combinations();
  if (total > cap)
    throw std::length_error("candidate set of " + std::to_string(total) +
                            " rows exceeds the cap of " + std::to_string(cap));
  CandidateSet set{grid, {}};
  set.rows.reserve(total);
  for (std::uint64_t label = 1; label <= total; ++label)
    set.rows.push_back(treatment_of_label(label, grid));
  return set;
}

Design random_start(const FactorGrid &grid, int runs, CounterRng &rng) {
  Design d(runs, grid.factors());
  const std::uint64_t total = grid.combinations();
  for (int i = 0; i < runs; ++i)
    d.set_row(i, treatment_of_label(1 + rng.below(total), grid));
  return d;
}

Design random_start(const CandidateSet &candidates, int runs, CounterRng &rng) {
  return random_start(candidates.grid, runs, rng);
}

// ---------------------------------------------------------------------------

double FunctionObjective::reset(const Design &design) {
  current_ = design;
  scratch_ = design;
  return fn_(current_);
}

double FunctionObjective::trial(int row, std::span<const int> settings) {
  scratch_.set_row(row, settings);
  const double v = fn_(scratch_);
  scratch_.set_row(row, current_.row(row));
  return v;
}

double FunctionObjective::commit(int row, std::span<const int> settings) {
  current_.set_row(row, settings);
  scratch_.set_row(row, settings);
  return fn_(current_);
}

Vector CompoundObjective::features(std::span<const int> settings) const {
  const auto &spec = eval_->spec();
  Vector f(1 + spec.p() + spec.q());
  f[0] = 1.0;
  for (int j = 0; j < spec.p(); ++j)
    f[1 + j] = term_value(spec.primary[static_cast<std::size_t>(j)], settings, spec.grid);
  for (int j = 0; j < spec.q(); ++j)
    f[1 + spec.p() + j] =
        term_value(spec.potential[static_cast<std::size_t>(j)], settings, spec.grid);
  return f;
}

void CompoundObjective::rebuild() {
  const auto &spec = eval_->spec();
  const int n = current_.runs();
  features_.resize(n, 1 + spec.p() + spec.q());
  counts_.clear();
  labels_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    features_.row(i) = features(current_.row(i)).transpose();
    labels_[static_cast<std::size_t>(i)] = treatment_label(current_.row(i), spec.grid);
    ++counts_[labels_[static_cast<std::size_t>(i)]];
  }
  gram_ = features_.transpose() * features_;
  const auto blocks = centered_blocks_from_gram(gram_, spec.p(), spec.q());
  value_ = eval_->evaluate(blocks, static_cast<int>(counts_.size()), false).compound();
}

double CompoundObjective::reset(const Design &design) {
  if (design.runs() != eval_->spec().runs)
    throw std::invalid_argument("design run count does not match the experiment");
  current_ = design;
  rebuild();
  return value_;
}

double CompoundObjective::trial(int row, std::span<const int> settings) {
  const auto &spec = eval_->spec();
  const Vector f_new = features(settings);
  const Vector f_old = features_.row(row).transpose();
  const Matrix g = gram_ - f_old * f_old.transpose() + f_new * f_new.transpose();

  const std::uint64_t old_label = labels_[static_cast<std::size_t>(row)];
  const std::uint64_t new_label = treatment_label(settings, spec.grid);
  int t = static_cast<int>(counts_.size());
  if (new_label != old_label) {
    if (counts_.at(old_label) == 1)
      --t;
    if (!counts_.contains(new_label))
      ++t;
  }
  return eval_->evaluate(centered_blocks_from_gram(g, spec.p(), spec.q()), t, false).compound();
}

double CompoundObjective::commit(int row, std::span<const int> settings) {
  current_.set_row(row, settings);
  rebuild();
  return value_;
}

// ---------------------------------------------------------------------------

bool strictly_improves(double candidate, double current, double rel_tol) {
  if (std::isnan(candidate))
    return false;
  if (!std::isfinite(current))
    return candidate < current;
  return candidate < current - rel_tol * std::abs(current);
}

ExchangeResult point_exchange(const Design &start, const CandidateSet &candidates,
                              ExchangeObjective &objective, const ExchangeOptions &options) {
  ExchangeResult res;
  double current = objective.reset(start);
  res.history.push_back(current);
  const int n = start.runs();
  for (res.passes = 0; res.passes < options.max_passes;) {
    ++res.passes;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const std::vector<int> here(objective.design().row(i).begin(),
                                  objective.design().row(i).end());
      double best = kInf;
      std::size_t best_c = candidates.size();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (candidates.rows[c] == here)
          continue;
        const double v = objective.trial(i, candidates.rows[c]);
        if (v < best) {
          best = v;
          best_c = c;
        }
      }
      if (best_c < candidates.size() && strictly_improves(best, current, options.rel_tol)) {
        current = objective.commit(i, candidates.rows[best_c]);
        res.history.push_back(current);
        changed = true;
      }
    }
    if (!changed) {
      res.converged = true;
      break;
    }
  }
  res.design = objective.design();
  res.value = current;
  return res;
}

ExchangeResult point_exchange(const Design &start, const CandidateSet &candidates,
                              std::function<double(const Design &)> objective,
                              const ExchangeOptions &options) {
  FunctionObjective obj(std::move(objective));
  return point_exchange(start, candidates, obj, options);
}

ExchangeResult coordinate_exchange(const Design &start, const FactorGrid &grid,
                                   ExchangeObjective &objective,
                                   const ExchangeOptions &options) {
  ExchangeResult res;
  double current = objective.reset(start);
  res.history.push_back(current);
  const int n = start.runs(), k = grid.factors();
  std::vector<int> row(static_cast<std::size_t>(k));
  for (res.passes = 0; res.passes < options.max_passes;) {
    ++res.passes;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto cur_row = objective.design().row(i);
        std::copy(cur_row.begin(), cur_row.end(), row.begin());
        const int here = row[static_cast<std::size_t>(j)];
        double best = kInf;
        int best_level = -1;
        for (int level = 0; level < grid.levels(j); ++level) {
          if (level == here)
            continue;
          row[static_cast<std::size_t>(j)] = level;
          const double v = objective.trial(i, row);
          if (v < best) {
            best = v;
            best_level = level;
          }
        }
        if (best_level >= 0 && strictly_improves(best, current, options.rel_tol)) {
          row[static_cast<std::size_t>(j)] = best_level;
          current = objective.commit(i, row);
          res.history.push_back(current);
          changed = true;
        }
      }
    }
    if (!changed) {
      res.converged = true;
      break;
    }
  }
  res.design = objective.design();
  res.value = current;
  return res;
}

ExchangeResult coordinate_exchange(const Design &start, const FactorGrid &grid,
                                   std::function<double(const Design &)> objective,
                                   const ExchangeOptions &options) {
  FunctionObjective obj(std::move(objective));
  return coordinate_exchange(start, grid, obj, options);
}

std::string_view algorithm_name(Algorithm a) { return a == Algorithm::ptex ? "ptex" : "coordex"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ptex")
    return Algorithm::ptex;
  if (name == "coordex")
    return Algorithm::coordex;
  throw std::invalid_argument("algorithm must be 'ptex' or 'coordex' (got '" + std::string(name) +
                              "')");
}

Algorithm default_algorithm(int factors) {
  return factors <= 4 ? Algorithm::ptex : Algorithm::coordex;
}

// ---------------------------------------------------------------------------

namespace {

struct RestartRun {
  Design design;
  CriterionBreakdown breakdown;
  RestartOutcome outcome;
};

RestartRun run_restart(const CompoundEvaluator &eval, const CandidateSet *candidates,
                       Algorithm algorithm, const SearchOptions &options, int r) {
  const auto &spec = eval.spec();
  CounterRng rng(derive_key(options.seed, restart_stream(static_cast<std::uint64_t>(r))));
  const Design start = random_start(spec.grid, spec.runs, rng);
  CompoundObjective objective(eval);
  const ExchangeResult ex = algorithm == Algorithm::ptex
                                ? point_exchange(start, *candidates, objective, options.exchange)
                                : coordinate_exchange(start, spec.grid, objective, options.exchange);
  RestartRun out{ex.design, eval.evaluate(ex.design), {}};
  out.outcome = {out.breakdown.compound(), ex.passes, ex.converged};
  return out;
}

} // namespace

SearchResult multi_start(const ExperimentSpec &spec, const SearchOptions &options) {
  const CompoundEvaluator eval(spec, prior_for(spec, options.seed));
  return multi_start(eval, options);
}

SearchResult multi_start(const CompoundEvaluator &eval, const SearchOptions &options) {
  if (options.restarts < 1)
    throw std::invalid_argument("restarts: must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  const auto &spec = eval.spec();
  const Algorithm algorithm = options.algorithm.value_or(default_algorithm(spec.grid.factors()));

  std::optional<CandidateSet> candidates;
  if (algorithm == Algorithm::ptex)
    candidates = build_candidates(spec.grid, options.candidate_cap);

  std::vector<std::optional<RestartRun>> runs(static_cast<std::size_t>(options.restarts));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (int r; (r = next.fetch_add(1)) < options.restarts && !failed.load();) {
      try {
        runs[static_cast<std::size_t>(r)] =
            run_restart(eval, candidates ? &*candidates : nullptr, algorithm, options, r);
      } catch (...) {
        if (!failed.exchange(true))
          failure = std::current_exception();
      }
    }
  };

  int workers = options.workers > 0 ? options.workers
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, options.restarts);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(worker);
  }
  if (failure)
    std::rethrow_exception(failure);

  SearchResult res;
  res.seed = options.seed;
  res.algorithm = algorithm;
  for (int r = 0; r < options.restarts; ++r) {
    const auto &run = *runs[static_cast<std::size_t>(r)];
    res.path.push_back(run.outcome.value);
    res.restarts.push_back(run.outcome);
    res.converged = res.converged && run.outcome.converged;
    if (run.outcome.value < res.path[static_cast<std::size_t>(res.best_restart)])
      res.best_restart = r;
  }
  const auto &best = *runs[static_cast<std::size_t>(res.best_restart)];
  const auto order = presentation_order(best.design, spec.grid);
  res.design = Design(best.design.runs(), best.design.factors());
  for (std::size_t i = 0; i < order.size(); ++i)
    res.design.set_row(static_cast<int>(i), best.design.row(order[i]));
  res.labels = replication_summary(res.design, spec.grid, spec.p()).labels;
  res.matrices = model_matrices(res.design, spec.primary, spec.potential, spec.grid);
  res.breakdown = best.breakdown;
  res.compound_value = res.path[static_cast<std::size_t>(res.best_restart)];
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

} // namespace rsd
