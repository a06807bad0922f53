#pragma once

// Design files, text reports, result records and efficiency tables.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsdesign/config.hpp"

namespace rsd {

/// CSV with header trt_label,x1,...,xk; rows sorted by label then run index,
/// settings printed as real values.
void write_design_csv(std::ostream &out, const Design &design, const FactorGrid &grid);
std::string design_csv(const Design &design, const FactorGrid &grid);

/// Reads a design written by write_design_csv or by another tool. The
/// trt_label column is optional; when present it must agree with the
/// settings. Throws std::runtime_error naming the row and column of any
/// setting that is not a grid level.
Design read_design_csv(std::istream &in, const FactorGrid &grid);
Design read_design_csv_file(const std::filesystem::path &path, const FactorGrid &grid);

struct EvalReport {
  CriterionBreakdown breakdown;
  ReplicationSummary replication;
  std::optional<Matrix> alias; // nullopt when M is singular
};

/// All components of the configured family; the prior sample (MSE.D) is
/// regenerated from `seed`.
EvalReport evaluate_design(const Design &design, const ExperimentSpec &spec, std::uint64_t seed);

std::string format_search_report(const RunConfig &config, const SearchResult &result);
std::string format_eval_report(const RunConfig &config, const Design &design,
                               const EvalReport &report);

nlohmann::json breakdown_json(const CriterionBreakdown &b);
CriterionBreakdown breakdown_from_json(const nlohmann::json &j);

/// Full-precision result records. Both carry "config", "design" and "breakdown".
nlohmann::json search_record(const RunConfig &config, const SearchResult &result);
nlohmann::json eval_record(const RunConfig &config, const Design &design,
                           const EvalReport &report);

struct EfficiencyTable {
  Family family = Family::mse_d;
  std::vector<EfficiencyRow> rows;
  /// Which of the primary / lack-of-fit / MSE references were found.
  std::array<bool, 3> have_reference{};
};

/// Re-evaluates every recorded design under the experiment of the first
/// record and computes efficiencies against the records whose kappa is a unit
/// vector. Columns without a reference are left empty; throws when there is
/// no reference at all or when the records describe different experiments.
EfficiencyTable efficiency_table(const std::vector<nlohmann::json> &records);
std::string format_efficiency_table(const EfficiencyTable &table);

} // namespace rsd
