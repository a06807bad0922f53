#include <iostream>

#include <CLI11.hpp>

#include "rsdesign/cli.hpp"

namespace {

void add_search_flags(CLI::App *cmd, rsd::cli::Overrides &o) {
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--starts", o.starts, "Number of random restarts");
  cmd->add_option("--algorithm", o.algorithm, "Exchange algorithm")
      ->check(CLI::IsMember({"ptex", "coordex"}));
  cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Compound-criterion optimal designs for response-surface experiments"};
  app.require_subcommand(1);

  std::filesystem::path config, design, out;
  std::vector<std::filesystem::path> records;
  std::optional<std::filesystem::path> report_out;
  rsd::cli::Overrides search_o, eval_o;

  auto *search = app.add_subcommand("search", "Search for an optimal design");
  search->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  add_search_flags(search, search_o);
  search->add_option("--out", search_o.out, "Output directory");

  auto *eval = app.add_subcommand("eval", "Evaluate a design file");
  eval->add_option("--config", config, "Config file or result record")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--design", design, "Design CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--seed", eval_o.seed, "Seed for the MSE.D prior sample");
  eval->add_option("--out", eval_o.out, "Output directory (default: print)");

  auto *report = app.add_subcommand("report", "Efficiency table over result records");
  report->add_option("--records", records, "result.json files")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output file (default: print)");

  CLI11_PARSE(app, argc, argv);

  if (*search)
    return rsd::cli::cmd_search(config, search_o, std::cout, std::cerr);
  if (*eval)
    return rsd::cli::cmd_eval(config, design, eval_o, std::cout, std::cerr);
  return rsd::cli::cmd_report(records, report_out, std::cout, std::cerr);
}
