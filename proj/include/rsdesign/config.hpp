#pragma once

// Run configuration: a JSON document describing the experiment, the
// criterion and the search. The schema is described in README.md.

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rsdesign/search.hpp"

namespace rsd {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ExperimentSpec spec;
  SearchOptions search;
  std::filesystem::path output_dir = "out";
};

/// Parses and validates a config document. Unknown keys are errors. A missing
/// seed is drawn from std::random_device so that it can be echoed.
RunConfig parse_config(const nlohmann::json &doc);
RunConfig parse_config_file(const std::filesystem::path &path);

/// Fully resolved config (explicit terms and weights, seed, algorithm) that
/// parses back to the same RunConfig.
nlohmann::json to_json(const RunConfig &config);

} // namespace rsd
