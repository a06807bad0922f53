#include "rsdesign/cli.hpp"

#include <fstream>
#include <ostream>

namespace rsd::cli {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error &e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

template <class F> int guarded(std::ostream &err, F &&body) {
  try {
    return body();
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

} // namespace

RunConfig load_config(const std::filesystem::path &path, const Overrides &o) {
  json doc = read_json(path);
  if (doc.is_object() && doc.contains("kind") && doc.contains("config"))
    doc = doc.at("config");
  RunConfig cfg = parse_config(doc);
  if (o.seed)
    cfg.search.seed = *o.seed;
  if (o.starts) {
    if (*o.starts < 1)
      throw ConfigError("--starts: must be at least 1");
    cfg.search.restarts = *o.starts;
  }
  if (o.algorithm) {
    try {
      cfg.search.algorithm = parse_algorithm(*o.algorithm);
    } catch (const std::invalid_argument &e) {
      throw ConfigError(std::string("--algorithm: ") + e.what());
    }
  }
  if (o.workers) {
    if (*o.workers < 0)
      throw ConfigError("--workers: must be non-negative");
    cfg.search.workers = *o.workers;
  }
  if (o.out)
    cfg.output_dir = *o.out;
  return cfg;
}

int cmd_search(const std::filesystem::path &config, const Overrides &overrides, std::ostream &out,
               std::ostream &err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(config, overrides);
    const SearchResult res = multi_start(cfg.spec, cfg.search);
    std::filesystem::create_directories(cfg.output_dir);
    write_file(cfg.output_dir / "design.csv", design_csv(res.design, cfg.spec.grid));
    write_file(cfg.output_dir / "report.txt", format_search_report(cfg, res));
    write_file(cfg.output_dir / "result.json", search_record(cfg, res).dump(2) + "\n");
    if (!res.converged)
      err << "warning: some restarts hit the pass limit before converging\n";
    out << "compound " << res.compound_value << "  pe_df " << res.breakdown.pe_df << "  lof_df "
        << res.breakdown.lof_df << "  seed " << res.seed << "  (" << res.wall_seconds << " s)\n"
        << "wrote " << (cfg.output_dir / "design.csv").string() << ", report.txt, result.json\n";
    return kOk;
  });
}

int cmd_eval(const std::filesystem::path &config, const std::filesystem::path &design,
             const Overrides &overrides, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(config, overrides);
    const Design d = read_design_csv_file(design, cfg.spec.grid);
    const EvalReport rep = evaluate_design(d, cfg.spec, cfg.search.seed);
    const std::string text = format_eval_report(cfg, d, rep);
    if (overrides.out) {
      std::filesystem::create_directories(*overrides.out);
      write_file(*overrides.out / "eval_report.txt", text);
      write_file(*overrides.out / "eval.json", eval_record(cfg, d, rep).dump(2) + "\n");
      out << "wrote " << (*overrides.out / "eval_report.txt").string() << ", eval.json\n";
    } else {
      out << text;
    }
    return kOk;
  });
}

int cmd_report(const std::vector<std::filesystem::path> &records,
               const std::optional<std::filesystem::path> &out_file, std::ostream &out,
               std::ostream &err) {
  return guarded(err, [&] {
    std::vector<json> docs;
    for (const auto &p : records)
      docs.push_back(read_json(p));
    const EfficiencyTable table = efficiency_table(docs);
    static const char *names[] = {"primary", "lack-of-fit", "MSE"};
    for (std::size_t c = 0; c < 3; ++c)
      if (!table.have_reference[c])
        err << "warning: no " << names[c] << " reference run; that column is left empty\n";
    const std::string text = format_efficiency_table(table);
    if (out_file) {
      write_file(*out_file, text);
      out << "wrote " << out_file->string() << "\n";
    } else {
      out << text;
    }
    return kOk;
  });
}

} // namespace rsd::cli
