#include "rsdesign/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rsd {

using nlohmann::json;

namespace {

std::string fmt(const char *spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string sig6(double v) {
  if (std::isnan(v))
    return "-";
  return fmt("%.6g", v);
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  for (auto &c : out) {
    const auto b = c.find_first_not_of(" \t\r\"");
    const auto e = c.find_last_not_of(" \t\r\"");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return out;
}

std::array<const char *, 4> component_names(Family f) {
  if (is_determinant(f))
    return {"DS", "DP", "LoF-DP", "MSE(D)"};
  return {"L", "LP", "LoF-LP", "MSE(L)"};
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json &j) {
  if (j.is_null())
    return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    return s == "inf" ? kInf : std::stod(s);
  }
  return j.get<double>();
}

// JSON has no infinity; failed designs are recorded as the string "inf".
json finite_or_tag(double v) {
  if (std::isinf(v))
    return "inf";
  return number_or_null(v);
}

json design_json(const Design &design, const FactorGrid &grid) {
  json rows = json::array();
  for (int i : presentation_order(design, grid)) {
    json row = json::array();
    for (int j = 0; j < design.factors(); ++j)
      row.push_back(grid.value(j, design.at(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Design design_from_json(const json &rows, const FactorGrid &grid) {
  Design d(static_cast<int>(rows.size()), grid.factors());
  for (int i = 0; i < d.runs(); ++i) {
    const auto &row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != grid.factors())
      throw std::runtime_error("record design row " + std::to_string(i + 1) + " has the wrong width");
    for (int j = 0; j < grid.factors(); ++j) {
      const int idx = grid.index_of(j, row[static_cast<std::size_t>(j)].get<double>());
      if (idx < 0)
        throw std::runtime_error("record design row " + std::to_string(i + 1) + ", x" +
                                 std::to_string(j + 1) + " is off the grid");
      d.at(i, j) = idx;
    }
  }
  return d;
}

void write_breakdown(std::ostream &out, const CriterionBreakdown &b) {
  const auto names = component_names(b.family);
  out << "components\n";
  const double values[] = {b.phi_base, b.phi_primary, b.phi_lof, b.phi_mse};
  for (int c = 0; c < 4; ++c) {
    char line[96];
    std::snprintf(line, sizeof line, "  %-8s %s\n", names[static_cast<std::size_t>(c)],
                  sig6(values[c]).c_str());
    out << line;
  }
  out << "compound   " << sig6(b.compound()) << "\n"
      << "treatments " << b.treatments << "\n"
      << "pe_df      " << b.pe_df << "\n"
      << "lof_df     " << b.lof_df << "\n";
}

void write_design_table(std::ostream &out, const Design &design, const FactorGrid &grid) {
  out << "design (trt_label: settings)\n";
  for (int i : presentation_order(design, grid)) {
    out << "  " << treatment_label(design.row(i), grid) << ":";
    for (int j = 0; j < design.factors(); ++j)
      out << " " << sig6(grid.value(j, design.at(i, j)));
    out << "\n";
  }
}

} // namespace

void write_design_csv(std::ostream &out, const Design &design, const FactorGrid &grid) {
  out << "trt_label";
  for (int j = 0; j < design.factors(); ++j)
    out << ",x" << j + 1;
  out << "\n";
  for (int i : presentation_order(design, grid)) {
    out << treatment_label(design.row(i), grid);
    for (int j = 0; j < design.factors(); ++j)
      out << "," << fmt("%.10g", grid.value(j, design.at(i, j)));
    out << "\n";
  }
}

std::string design_csv(const Design &design, const FactorGrid &grid) {
  std::ostringstream ss;
  write_design_csv(ss, design, grid);
  return ss.str();
}

Design read_design_csv(std::istream &in, const FactorGrid &grid) {
  const int k = grid.factors();
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("design file is empty");
  const auto header = split_csv(line);
  const bool labelled = !header.empty() && header[0] == "trt_label";
  const int offset = labelled ? 1 : 0;
  if (static_cast<int>(header.size()) != k + offset)
    throw std::runtime_error("design header has " + std::to_string(header.size()) +
                             " columns, expected " + std::to_string(k + offset));
  for (int j = 0; j < k; ++j)
    if (header[static_cast<std::size_t>(j + offset)] != "x" + std::to_string(j + 1))
      throw std::runtime_error("design header column " + std::to_string(j + offset + 1) +
                               " should be x" + std::to_string(j + 1));

  std::vector<std::vector<int>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const auto cells = split_csv(line);
    const std::string where = "row " + std::to_string(rows.size() + 1);
    if (static_cast<int>(cells.size()) != k + offset)
      throw std::runtime_error(where + ": expected " + std::to_string(k + offset) + " columns");
    std::vector<int> row(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const auto &cell = cells[static_cast<std::size_t>(j + offset)];
      const std::string col = "column x" + std::to_string(j + 1);
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size())
          throw std::invalid_argument(cell);
      } catch (const std::exception &) {
        throw std::runtime_error(where + ", " + col + ": '" + cell + "' is not a number");
      }
      const int idx = grid.index_of(j, v);
      if (idx < 0)
        throw std::runtime_error(where + ", " + col + ": " + cell + " is not a level of factor " +
                                 std::to_string(j + 1));
      row[static_cast<std::size_t>(j)] = idx;
    }
    if (labelled) {
      const auto expected = treatment_label(row, grid);
      if (cells[0] != std::to_string(expected))
        throw std::runtime_error(where + ", column trt_label: '" + cells[0] +
                                 "' does not match the settings (expected " +
                                 std::to_string(expected) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::runtime_error("design file has no runs");
  Design d(static_cast<int>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i)
    d.set_row(static_cast<int>(i), rows[i]);
  return d;
}

Design read_design_csv_file(const std::filesystem::path &path, const FactorGrid &grid) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open design file '" + path.string() + "'");
  return read_design_csv(in, grid);
}

EvalReport evaluate_design(const Design &design, const ExperimentSpec &spec, std::uint64_t seed) {
  if (design.factors() != spec.grid.factors())
    throw std::invalid_argument("design has " + std::to_string(design.factors()) +
                                " factors, the experiment has " +
                                std::to_string(spec.grid.factors()));
  ExperimentSpec s = spec;
  s.runs = design.runs();
  const CompoundEvaluator eval(s, prior_for(s, seed));
  EvalReport r;
  r.breakdown = eval.evaluate(design);
  r.replication = replication_summary(design, s.grid, s.p());
  const auto mats = model_matrices(design, s.primary, s.potential, s.grid);
  r.alias = alias_matrix(mats.primary, mats.potential);
  return r;
}

std::string format_search_report(const RunConfig &config, const SearchResult &result) {
  std::ostringstream out;
  const auto &crit = config.spec.criterion;
  out << "search report\n"
      << "criterion  " << family_name(crit.family) << "\n"
      << "kappa      " << sig6(crit.kappa.primary) << " " << sig6(crit.kappa.lof) << " "
      << sig6(crit.kappa.mse) << "\n"
      << "seed       " << result.seed << "\n"
      << "algorithm  " << algorithm_name(result.algorithm) << "\n"
      << "restarts   " << result.path.size() << " (best " << result.best_restart + 1 << ")\n"
      << "converged  " << (result.converged ? "yes" : "no") << "\n\n";
  write_breakdown(out, result.breakdown);
  out << "\npath\n";
  for (std::size_t r = 0; r < result.path.size(); ++r)
    out << "  " << r + 1 << " " << sig6(result.path[r]) << "\n";
  out << "\n";
  write_design_table(out, result.design, config.spec.grid);
  out << "\nconfig\n" << to_json(config).dump(2) << "\n";
  return out.str();
}

std::string format_eval_report(const RunConfig &config, const Design &design,
                               const EvalReport &report) {
  std::ostringstream out;
  const auto &spec = config.spec;
  out << "evaluation report\n"
      << "criterion  " << family_name(spec.criterion.family) << "\n"
      << "seed       " << config.search.seed << "\n"
      << "runs       " << design.runs() << "\n\n";
  write_breakdown(out, report.breakdown);

  out << "\nalias matrix (rows: primary terms, columns: potential terms)\n";
  if (!report.alias) {
    out << "  undefined: information matrix is singular\n";
  } else if (spec.q() == 0) {
    out << "  no potential terms\n";
  } else {
    out << "  " << std::string(10, ' ');
    for (const auto &t : spec.potential.terms()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %11.11s", t.name().c_str());
      out << buf;
    }
    out << "\n";
    for (int i = 0; i < spec.p(); ++i) {
      const auto name = spec.primary[static_cast<std::size_t>(i)].name();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%-10.10s", name.c_str());
      out << "  " << buf;
      for (int j = 0; j < spec.q(); ++j) {
        const double v = (*report.alias)(i, j);
        out << " " << fmt("%11.6g", std::abs(v) < 1e-12 ? 0.0 : v);
      }
      out << "\n";
    }
  }

  std::map<std::uint64_t, int> reps;
  for (auto l : report.replication.labels)
    ++reps[l];
  out << "\nreplication (trt_label x count)\n ";
  for (const auto &[label, count] : reps)
    out << " " << label << "x" << count;
  out << "\n\n";
  write_design_table(out, design, spec.grid);
  out << "\nconfig\n" << to_json(config).dump(2) << "\n";
  return out.str();
}

json breakdown_json(const CriterionBreakdown &b) {
  return {{"family", std::string(family_name(b.family))},
          {"phi_base", finite_or_tag(b.phi_base)},
          {"phi_primary", finite_or_tag(b.phi_primary)},
          {"phi_lof", finite_or_tag(b.phi_lof)},
          {"phi_mse", finite_or_tag(b.phi_mse)},
          {"log_compound", finite_or_tag(b.log_compound)},
          {"compound", finite_or_tag(b.compound())},
          {"treatments", b.treatments},
          {"pe_df", b.pe_df},
          {"lof_df", b.lof_df}};
}

CriterionBreakdown breakdown_from_json(const json &j) {
  CriterionBreakdown b;
  b.family = parse_family(j.at("family").get<std::string>());
  b.phi_base = number_from(j.at("phi_base"));
  b.phi_primary = number_from(j.at("phi_primary"));
  b.phi_lof = number_from(j.at("phi_lof"));
  b.phi_mse = number_from(j.at("phi_mse"));
  b.log_compound = number_from(j.at("log_compound"));
  b.treatments = j.at("treatments").get<int>();
  b.pe_df = j.at("pe_df").get<int>();
  b.lof_df = j.at("lof_df").get<int>();
  return b;
}

json search_record(const RunConfig &config, const SearchResult &result) {
  json path = json::array();
  for (double v : result.path)
    path.push_back(finite_or_tag(v));
  return {{"kind", "search"},
          {"config", to_json(config)},
          {"seed", result.seed},
          {"algorithm", std::string(algorithm_name(result.algorithm))},
          {"converged", result.converged},
          {"best_restart", result.best_restart + 1},
          {"path", path},
          {"breakdown", breakdown_json(result.breakdown)},
          {"labels", result.labels},
          {"design", design_json(result.design, config.spec.grid)}};
}

json eval_record(const RunConfig &config, const Design &design, const EvalReport &report) {
  json alias = nullptr;
  if (report.alias) {
    alias = json::array();
    for (Eigen::Index i = 0; i < report.alias->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < report.alias->cols(); ++j)
        row.push_back((*report.alias)(i, j));
      alias.push_back(row);
    }
  }
  return {{"kind", "eval"},
          {"config", to_json(config)},
          {"seed", config.search.seed},
          {"breakdown", breakdown_json(report.breakdown)},
          {"alias", alias},
          {"labels", report.replication.labels},
          {"design", design_json(design, config.spec.grid)}};
}

EfficiencyTable efficiency_table(const std::vector<json> &records) {
  if (records.empty())
    throw std::invalid_argument("no result records given");
  const RunConfig base = parse_config(records.front().at("config"));

  // the experiment must be the same apart from kappa and search settings
  auto experiment = [](json cfg) {
    for (const char *key : {"kappa", "search", "output"})
      cfg.erase(key);
    return cfg;
  };
  const json base_experiment = experiment(records.front().at("config"));

  std::vector<Kappa> kappas;
  std::vector<CriterionBreakdown> values;
  ExperimentSpec spec = base.spec;
  spec.criterion.kappa = {1.0, 0.0, 0.0};
  const CompoundEvaluator eval(spec, prior_for(spec, base.search.seed));
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto &rec = records[r];
    if (experiment(rec.at("config")) != base_experiment)
      throw std::invalid_argument("record " + std::to_string(r + 1) +
                                  " describes a different experiment than record 1");
    const RunConfig cfg = parse_config(rec.at("config"));
    kappas.push_back(cfg.spec.criterion.kappa);
    values.push_back(eval.evaluate(design_from_json(rec.at("design"), spec.grid)));
  }

  EfficiencyTable table;
  table.family = spec.criterion.family;
  std::array<std::optional<std::size_t>, 3> refs;
  for (std::size_t r = 0; r < kappas.size(); ++r) {
    const Kappa &k = kappas[r];
    const std::array<double, 3> w{k.primary, k.lof, k.mse};
    for (std::size_t c = 0; c < 3; ++c)
      if (w[c] == 1.0 && !refs[c])
        refs[c] = r;
  }
  if (!refs[0] && !refs[1] && !refs[2])
    throw std::invalid_argument(
        "no reference run: need a record with kappa (1,0,0), (0,1,0) or (0,0,1)");
  for (std::size_t c = 0; c < 3; ++c)
    table.have_reference[c] = refs[c].has_value();

  // a missing reference is replaced by a NaN one, which leaves the column empty
  CriterionBreakdown none;
  none.phi_primary = none.phi_lof = none.phi_mse = std::numeric_limits<double>::quiet_NaN();
  values.push_back(none);
  kappas.emplace_back();
  const std::size_t missing = values.size() - 1;
  table.rows = efficiency_report(kappas, values, refs[0].value_or(missing),
                                 refs[1].value_or(missing), refs[2].value_or(missing));
  table.rows.pop_back();
  return table;
}

std::string format_efficiency_table(const EfficiencyTable &table) {
  const auto names = component_names(table.family);
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%8s %8s %8s %9s %9s %9s %6s %6s\n", "k_prim", "k_lof", "k_mse",
                names[1], names[2], names[3], "PE", "LoF");
  out << line;
  auto eff = [](const std::optional<double> &v) { return v ? fmt("%.2f", *v) : std::string("-"); };
  for (const auto &row : table.rows) {
    std::snprintf(line, sizeof line, "%8s %8s %8s %9s %9s %9s %6d %6d\n",
                  sig6(row.kappa.primary).c_str(), sig6(row.kappa.lof).c_str(),
                  sig6(row.kappa.mse).c_str(), eff(row.primary).c_str(), eff(row.lof).c_str(),
                  eff(row.mse).c_str(), row.pe_df, row.lof_df);
    out << line;
  }
  return out.str();
}

} // namespace rsd
