#pragma once

// The search / eval / report commands behind the rsdesign executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsdesign/report.hpp"

namespace rsd::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadInput = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> starts;
  std::optional<std::string> algorithm;
  std::optional<int> workers;
  std::optional<std::filesystem::path> out;
};

/// Reads a config file. A result record written by `search` or `eval` is also
/// accepted; its embedded config is used.
RunConfig load_config(const std::filesystem::path &path, const Overrides &overrides = {});

/// Writes design.csv, report.txt and result.json into the output directory.
int cmd_search(const std::filesystem::path &config, const Overrides &overrides, std::ostream &out,
               std::ostream &err);

/// Evaluates a design file; writes eval_report.txt and eval.json when an
/// output directory is given, otherwise prints the report.
int cmd_eval(const std::filesystem::path &config, const std::filesystem::path &design,
             const Overrides &overrides, std::ostream &out, std::ostream &err);

/// Efficiency table over result records; written to `out_file` when given.
int cmd_report(const std::vector<std::filesystem::path> &records,
               const std::optional<std::filesystem::path> &out_file, std::ostream &out,
               std::ostream &err);

} // namespace rsd::cli
