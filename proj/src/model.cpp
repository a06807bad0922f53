#include "rsdesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rsd {

FactorGrid::FactorGrid(std::vector<int> levels_per_factor)
    : levels_(std::move(levels_per_factor)) {
  if (levels_.empty())
    throw std::invalid_argument("at least one factor is required");
  values_.reserve(levels_.size());
  for (int L : levels_) {
    if (L < 2)
      throw std::invalid_argument("each factor needs >=2 levels");
    std::vector<double> v(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i)
      v[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (L - 1);
    // pin the ends so they are exactly +-1
    v.front() = -1.0;
    v.back() = 1.0;
    values_.push_back(std::move(v));
  }
}

FactorGrid::FactorGrid(int factors, int levels)
    : FactorGrid(std::vector<int>(static_cast<std::size_t>(std::max(factors, 0)), levels)) {}

double FactorGrid::value(int factor, int index) const {
  return values_[static_cast<std::size_t>(factor)][static_cast<std::size_t>(index)];
}

int FactorGrid::index_of(int factor, double setting, double tol) const {
  const auto &v = values_[static_cast<std::size_t>(factor)];
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - setting) <= tol)
      return static_cast<int>(i);
  return -1;
}

std::uint64_t FactorGrid::combinations() const {
  std::uint64_t c = 1;
  for (int L : levels_)
    c *= static_cast<std::uint64_t>(L);
  return c;
}

int Term::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

bool Term::is_pure_quadratic() const {
  int twos = 0, others = 0;
  for (int e : exponents) {
    if (e == 2)
      ++twos;
    else if (e != 0)
      ++others;
  }
  return twos == 1 && others == 0;
}

std::string Term::name() const {
  std::string out;
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    if (exponents[j] == 0)
      continue;
    if (!out.empty())
      out += '*';
    out += 'x' + std::to_string(j + 1);
    if (exponents[j] > 1)
      out += '^' + std::to_string(exponents[j]);
  }
  return out;
}

Term Term::with_default_weight(std::vector<int> exponents) {
  Term t{std::move(exponents), 1.0};
  if (t.is_pure_quadratic())
    t.weight = 0.25;
  return t;
}

TermSet::TermSet(std::vector<Term> terms, TermRole role, int factors)
    : terms_(std::move(terms)), role_(role) {
  for (const auto &t : terms_) {
    if (static_cast<int>(t.exponents.size()) != factors)
      throw std::invalid_argument("term exponent vector has length " +
                                  std::to_string(t.exponents.size()) + ", expected " +
                                  std::to_string(factors));
    if (std::any_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e < 0; }))
      throw std::invalid_argument("term exponents must be non-negative");
    if (t.degree() < 1)
      throw std::invalid_argument("terms must have total degree >= 1 (the intercept is implicit)");
    if (!(t.weight > 0.0))
      throw std::invalid_argument("term weights must be positive");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i)
    for (std::size_t j = i + 1; j < terms_.size(); ++j)
      if (terms_[i].exponents == terms_[j].exponents)
        throw std::invalid_argument("duplicate term " + terms_[i].name());
}

Vector TermSet::weights() const {
  Vector w(static_cast<Eigen::Index>(terms_.size()));
  for (std::size_t i = 0; i < terms_.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = terms_[i].weight;
  return w;
}

bool TermSet::contains(const std::vector<int> &exponents) const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [&](const Term &t) { return t.exponents == exponents; });
}

void require_disjoint(const TermSet &primary, const TermSet &potential) {
  for (const auto &t : potential.terms())
    if (primary.contains(t.exponents))
      throw std::invalid_argument("term " + t.name() + " is both primary and potential");
}

bool canonical_term_less(const Term &a, const Term &b) {
  const int da = a.degree(), db = b.degree();
  if (da != db)
    return da < db;
  return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(),
                                      a.exponents.begin(), a.exponents.end());
}

namespace {

std::vector<int> unit(int k, std::initializer_list<std::pair<int, int>> entries) {
  std::vector<int> e(static_cast<std::size_t>(k), 0);
  for (auto [j, p] : entries)
    e[static_cast<std::size_t>(j)] += p;
  return e;
}

} // namespace

std::vector<Term> expand_preset(std::string_view preset, int k) {
  if (k < 1)
    throw std::invalid_argument("preset expansion needs at least one factor");
  std::vector<Term> out;
  auto add = [&](std::vector<int> e) { out.push_back(Term::with_default_weight(std::move(e))); };

  if (preset == "main_effects") {
    for (int i = 0; i < k; ++i)
      add(unit(k, {{i, 1}}));
  } else if (preset == "quadratic_terms") {
    for (int i = 0; i < k; ++i)
      add(unit(k, {{i, 2}}));
  } else if (preset == "linear_interactions") {
    if (k < 2)
      throw std::invalid_argument("linear_interactions needs k >= 2");
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        add(unit(k, {{i, 1}, {j, 1}}));
  } else if (preset == "second_order") {
    for (int i = 0; i < k; ++i)
      add(unit(k, {{i, 1}}));
    for (int i = 0; i < k; ++i) {
      add(unit(k, {{i, 2}}));
      for (int j = i + 1; j < k; ++j)
        add(unit(k, {{i, 1}, {j, 1}}));
    }
  } else if (preset == "cubic_terms") {
    for (int i = 0; i < k; ++i)
      add(unit(k, {{i, 3}}));
  } else if (preset == "third_order_terms") {
    if (k < 2)
      throw std::invalid_argument("third_order_terms needs k >= 2");
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        for (int l = j + 1; l < k; ++l)
          add(unit(k, {{i, 1}, {j, 1}, {l, 1}}));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (i != j)
          add(unit(k, {{i, 2}, {j, 1}}));
  } else {
    throw std::invalid_argument("unknown model preset '" + std::string(preset) + "'");
  }
  std::stable_sort(out.begin(), out.end(), canonical_term_less);
  return out;
}

std::vector<Term> expand_presets(std::span<const std::string> presets, int k) {
  std::vector<Term> out;
  for (const auto &p : presets) {
    auto part = expand_preset(p, k);
    for (auto &t : part) {
      if (std::any_of(out.begin(), out.end(),
                      [&](const Term &u) { return u.exponents == t.exponents; }))
        throw std::invalid_argument("preset '" + p + "' repeats term " + t.name());
      out.push_back(std::move(t));
    }
  }
  std::stable_sort(out.begin(), out.end(), canonical_term_less);
  return out;
}

void Design::set_row(int i, std::span<const int> settings) {
  std::copy(settings.begin(), settings.end(),
            idx_.begin() + static_cast<std::ptrdiff_t>(i) * factors_);
}

bool Design::valid_for(const FactorGrid &grid) const {
  if (factors_ != grid.factors())
    return false;
  for (int i = 0; i < runs_; ++i)
    for (int j = 0; j < factors_; ++j)
      if (at(i, j) < 0 || at(i, j) >= grid.levels(j))
        return false;
  return true;
}

double term_value(const Term &term, std::span<const int> row, const FactorGrid &grid) {
  double v = 1.0;
  for (std::size_t j = 0; j < term.exponents.size(); ++j) {
    const double x = grid.value(static_cast<int>(j), row[j]);
    for (int e = 0; e < term.exponents[j]; ++e)
      v *= x;
  }
  return v;
}

Vector evaluate_term(const Term &term, const Design &design, const FactorGrid &grid) {
  Vector col(design.runs());
  for (int i = 0; i < design.runs(); ++i)
    col[i] = term_value(term, design.row(i), grid);
  return col;
}

ModelMatrices model_matrices(const Design &design, const TermSet &primary,
                             const TermSet &potential, const FactorGrid &grid) {
  const int n = design.runs();
  ModelMatrices m{Matrix(n, static_cast<Eigen::Index>(primary.size())),
                  Matrix(n, static_cast<Eigen::Index>(potential.size()))};
  for (int i = 0; i < n; ++i) {
    const auto row = design.row(i);
    for (std::size_t j = 0; j < primary.size(); ++j)
      m.primary(i, static_cast<Eigen::Index>(j)) = term_value(primary[j], row, grid);
    for (std::size_t j = 0; j < potential.size(); ++j)
      m.potential(i, static_cast<Eigen::Index>(j)) = term_value(potential[j], row, grid);
  }
  return m;
}

std::uint64_t treatment_label(std::span<const int> row, const FactorGrid &grid) {
  std::uint64_t label = 0;
  for (int j = 0; j < grid.factors(); ++j)
    label = label * static_cast<std::uint64_t>(grid.levels(j)) +
            static_cast<std::uint64_t>(row[static_cast<std::size_t>(j)]);
  return label + 1;
}

std::vector<int> treatment_of_label(std::uint64_t label, const FactorGrid &grid) {
  if (label < 1 || label > grid.combinations())
    throw std::out_of_range("treatment label out of range");
  std::vector<int> row(static_cast<std::size_t>(grid.factors()));
  std::uint64_t rest = label - 1;
  for (int j = grid.factors() - 1; j >= 0; --j) {
    const auto L = static_cast<std::uint64_t>(grid.levels(j));
    row[static_cast<std::size_t>(j)] = static_cast<int>(rest % L);
    rest /= L;
  }
  return row;
}

ReplicationSummary replication_summary(const Design &design, const FactorGrid &grid,
                                       int primary_terms) {
  ReplicationSummary s;
  s.labels.reserve(static_cast<std::size_t>(design.runs()));
  for (int i = 0; i < design.runs(); ++i)
    s.labels.push_back(treatment_label(design.row(i), grid));
  auto sorted = s.labels;
  std::sort(sorted.begin(), sorted.end());
  s.treatments = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  s.pure_error_df = design.runs() - s.treatments;
  s.lack_of_fit_df = std::max(s.treatments - primary_terms - 1, 0);
  return s;
}

std::vector<int> presentation_order(const Design &design, const FactorGrid &grid) {
  std::vector<int> order(static_cast<std::size_t>(design.runs()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> labels(order.size());
  for (int i = 0; i < design.runs(); ++i)
    labels[static_cast<std::size_t>(i)] = treatment_label(design.row(i), grid);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
  });
  return order;
}

} // namespace rsd
