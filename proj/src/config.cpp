#include "rsdesign/config.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <set>

namespace rsd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string &field, const std::string &reason) {
  throw ConfigError(field + ": " + reason);
}

void check_keys(const json &obj, const std::string &where, std::set<std::string> allowed) {
  if (!obj.is_object())
    fail(where.empty() ? "config" : where, "expected an object");
  for (const auto &[key, value] : obj.items())
    if (!allowed.contains(key))
      fail(where.empty() ? key : where + "." + key, "unknown key");
}

int get_int(const json &obj, const std::string &key, const std::string &field, int fallback,
            bool required = false) {
  if (!obj.contains(key)) {
    if (required)
      fail(field, "is required");
    return fallback;
  }
  const auto &v = obj.at(key);
  if (!v.is_number_integer())
    fail(field, "must be an integer");
  return v.get<int>();
}

// Accepts numbers and "a/b" fraction strings.
double get_real(const json &v, const std::string &field) {
  if (v.is_number())
    return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos)
        return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception &) {
      fail(field, "cannot parse '" + s + "' as a number");
    }
  }
  fail(field, "must be a number");
}

double get_real(const json &obj, const std::string &key, const std::string &field,
                double fallback) {
  return obj.contains(key) ? get_real(obj.at(key), field) : fallback;
}

std::vector<Term> parse_terms(const json &node, const std::string &field, int k) {
  check_keys(node, field, {"preset", "terms"});
  // explicit terms take precedence over presets
  if (node.contains("terms")) {
    const auto &list = node.at("terms");
    if (!list.is_array())
      fail(field + ".terms", "must be an array");
    std::vector<Term> terms;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string f = field + ".terms[" + std::to_string(i) + "]";
      const auto &t = list[i];
      const json *exps = &t;
      std::optional<double> weight;
      if (t.is_object()) {
        check_keys(t, f, {"exponents", "weight"});
        if (!t.contains("exponents"))
          fail(f + ".exponents", "is required");
        exps = &t.at("exponents");
        if (t.contains("weight"))
          weight = get_real(t.at("weight"), f + ".weight");
      }
      if (!exps->is_array())
        fail(f, "exponents must be an array of integers");
      std::vector<int> e;
      for (const auto &x : *exps) {
        if (!x.is_number_integer())
          fail(f, "exponents must be an array of integers");
        e.push_back(x.get<int>());
      }
      Term term = Term::with_default_weight(std::move(e));
      if (weight)
        term.weight = *weight;
      terms.push_back(std::move(term));
    }
    return terms;
  }
  if (node.contains("preset")) {
    const auto &p = node.at("preset");
    std::vector<std::string> names;
    if (p.is_string())
      names.push_back(p.get<std::string>());
    else if (p.is_array())
      for (const auto &x : p) {
        if (!x.is_string())
          fail(field + ".preset", "must be a string or an array of strings");
        names.push_back(x.get<std::string>());
      }
    else
      fail(field + ".preset", "must be a string or an array of strings");
    try {
      return expand_presets(names, k);
    } catch (const std::invalid_argument &e) {
      fail(field + ".preset", e.what());
    }
  }
  return {};
}

Kappa parse_kappa(const json &v) {
  Kappa k;
  if (v.is_array()) {
    if (v.size() != 3)
      fail("kappa", "expected three weights");
    k = {get_real(v[0], "kappa[0]"), get_real(v[1], "kappa[1]"), get_real(v[2], "kappa[2]")};
  } else {
    check_keys(v, "kappa", {"primary", "lof", "mse"});
    k = {get_real(v, "primary", "kappa.primary", 0.0), get_real(v, "lof", "kappa.lof", 0.0),
         get_real(v, "mse", "kappa.mse", 0.0)};
  }
  return k;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json terms_json(const TermSet &set) {
  json list = json::array();
  for (const auto &t : set.terms())
    list.push_back({{"exponents", t.exponents}, {"weight", t.weight}});
  return {{"terms", list}};
}

} // namespace

RunConfig parse_config(const json &doc) {
  check_keys(doc, "",
             {"factors", "levels", "runs", "primary", "potential", "criterion", "kappa", "tau2",
              "alpha", "alpha_lof", "mc_samples", "search", "output"});
  RunConfig cfg;
  cfg.search.workers = 0; // all available cores unless configured
  const int k = get_int(doc, "factors", "factors", 0, true);
  if (k < 1)
    fail("factors", "must be at least 1");

  std::vector<int> levels;
  if (!doc.contains("levels"))
    fail("levels", "is required");
  if (const auto &lv = doc.at("levels"); lv.is_number_integer()) {
    levels.assign(static_cast<std::size_t>(k), lv.get<int>());
  } else if (lv.is_array()) {
    for (const auto &x : lv) {
      if (!x.is_number_integer())
        fail("levels", "must be an integer or an array of integers");
      levels.push_back(x.get<int>());
    }
    if (static_cast<int>(levels.size()) != k)
      fail("levels", "needs one entry per factor");
  } else {
    fail("levels", "must be an integer or an array of integers");
  }
  for (int L : levels)
    if (L < 2)
      fail("levels", "each factor needs >=2 levels");

  auto &spec = cfg.spec;
  spec.grid = FactorGrid(levels);
  spec.runs = get_int(doc, "runs", "runs", 0, true);
  if (spec.runs < 1)
    fail("runs", "must be at least 1");

  try {
    auto primary = doc.contains("primary") ? parse_terms(doc.at("primary"), "primary", k)
                                           : expand_preset("main_effects", k);
    auto potential = doc.contains("potential")
                         ? parse_terms(doc.at("potential"), "potential", k)
                         : std::vector<Term>{};
    spec.primary = TermSet(std::move(primary), TermRole::primary, k);
    spec.potential = TermSet(std::move(potential), TermRole::potential, k);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(std::string("model terms: ") + e.what());
  }

  auto &crit = spec.criterion;
  if (doc.contains("criterion")) {
    if (!doc.at("criterion").is_string())
      fail("criterion", "must be a string");
    try {
      crit.family = parse_family(doc.at("criterion").get<std::string>());
    } catch (const std::invalid_argument &e) {
      fail("criterion", e.what());
    }
  }
  if (doc.contains("kappa"))
    crit.kappa = parse_kappa(doc.at("kappa"));
  crit.tau2 = get_real(doc, "tau2", "tau2", crit.tau2);
  crit.alpha = get_real(doc, "alpha", "alpha", crit.alpha);
  crit.alpha_lof = get_real(doc, "alpha_lof", "alpha_lof", crit.alpha_lof);
  crit.mc_samples = get_int(doc, "mc_samples", "mc_samples", crit.mc_samples);

  bool have_seed = false;
  if (doc.contains("search")) {
    const auto &s = doc.at("search");
    check_keys(s, "search", {"restarts", "algorithm", "seed", "workers", "max_passes"});
    cfg.search.restarts = get_int(s, "restarts", "search.restarts", cfg.search.restarts);
    cfg.search.workers = get_int(s, "workers", "search.workers", cfg.search.workers);
    cfg.search.exchange.max_passes =
        get_int(s, "max_passes", "search.max_passes", cfg.search.exchange.max_passes);
    if (s.contains("algorithm")) {
      if (!s.at("algorithm").is_string())
        fail("search.algorithm", "must be a string");
      const auto a = s.at("algorithm").get<std::string>();
      if (a != "auto") {
        try {
          cfg.search.algorithm = parse_algorithm(a);
        } catch (const std::invalid_argument &e) {
          fail("search.algorithm", e.what());
        }
      }
    }
    if (s.contains("seed")) {
      const auto &seed = s.at("seed");
      if (seed.is_number_unsigned())
        cfg.search.seed = seed.get<std::uint64_t>();
      else if (seed.is_number_integer() && seed.get<std::int64_t>() >= 0)
        cfg.search.seed = static_cast<std::uint64_t>(seed.get<std::int64_t>());
      else
        fail("search.seed", "must be a non-negative integer");
      have_seed = true;
    }
  }
  if (!have_seed)
    cfg.search.seed = entropy_seed();
  if (cfg.search.restarts < 1)
    fail("search.restarts", "must be at least 1");
  if (cfg.search.workers < 0)
    fail("search.workers", "must be non-negative");
  if (cfg.search.exchange.max_passes < 1)
    fail("search.max_passes", "must be at least 1");

  if (doc.contains("output")) {
    const auto &o = doc.at("output");
    check_keys(o, "output", {"dir"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string())
        fail("output.dir", "must be a string");
      cfg.output_dir = o.at("dir").get<std::string>();
    }
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error &e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig &cfg) {
  const auto &spec = cfg.spec;
  const auto &crit = spec.criterion;
  const Algorithm algorithm = cfg.search.algorithm.value_or(default_algorithm(spec.grid.factors()));
  return {
      {"factors", spec.grid.factors()},
      {"levels", spec.grid.levels_per_factor()},
      {"runs", spec.runs},
      {"primary", terms_json(spec.primary)},
      {"potential", terms_json(spec.potential)},
      {"criterion", std::string(family_name(crit.family))},
      {"kappa", {{"primary", crit.kappa.primary}, {"lof", crit.kappa.lof}, {"mse", crit.kappa.mse}}},
      {"tau2", crit.tau2},
      {"alpha", crit.alpha},
      {"alpha_lof", crit.alpha_lof},
      {"mc_samples", crit.mc_samples},
      {"search",
       {{"restarts", cfg.search.restarts},
        {"algorithm", std::string(algorithm_name(algorithm))},
        {"seed", cfg.search.seed},
        {"workers", cfg.search.workers},
        {"max_passes", cfg.search.exchange.max_passes}}},
      {"output", {{"dir", cfg.output_dir.string()}}},
  };
}

} // namespace rsd
