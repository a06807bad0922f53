// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance            run criteria 1-8
//   acceptance 1 3 5      run the listed criteria
//
// Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "rsdesign/cli.hpp"
#include "support/oracles.hpp"

using namespace rsd;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string &what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v, const char *spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int distinct_rows(const Design &d) {
  std::set<std::vector<int>> rows;
  for (int i = 0; i < d.runs(); ++i)
    rows.emplace(d.row(i).begin(), d.row(i).end());
  return static_cast<int>(rows.size());
}

ExperimentSpec make_spec(int k, int levels, int runs, const std::vector<std::string> &primary,
                         const std::vector<std::string> &potential, Family family, Kappa kappa) {
  ExperimentSpec s;
  s.grid = FactorGrid(k, levels);
  s.runs = runs;
  s.primary = TermSet(expand_presets(primary, k), TermRole::primary, k);
  s.potential = TermSet(expand_presets(potential, k), TermRole::potential, k);
  s.criterion.family = family;
  s.criterion.kappa = kappa;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

Outcome determinant_lemma() {
  oracle::Gen gen(101);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int p = gen.integer(1, 8), q = gen.integer(1, 6);
    const int n = gen.integer(p + 2, 30);
    const Matrix x1 = gen.normal_matrix(n, p), x2 = gen.normal_matrix(n, q);
    PriorSample one{gen.normal_matrix(1, q), 1.0, 0};
    const double lemma = phi_mse_d_mc(centered_info(x1), x1, x2, one);
    const double direct = oracle::mse_det(x1, x2, one.draws.row(0).transpose());
    worst = std::max(worst, oracle::rel_err(lemma, direct));
  }
  Outcome o;
  o.require(worst < 1e-8, "relative error " + num(worst) + " >= 1e-8");
  o.note("200 instances, max relative error " + num(worst, "%.2e"));
  return o;
}

Outcome criterion_oracles() {
  oracle::Gen gen(202);
  std::map<std::string, double> worst;
  auto track = [&](const char *name, double got, double want) {
    worst[name] = std::max(worst[name], oracle::rel_err(got, want));
  };
  const double alpha = 0.05;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = gen.integer(1, 6), q = gen.integer(1, 5);
    const int n = gen.integer(p + q + 2, 30), pe_df = gen.integer(1, 20);
    const double tau2 = 0.25 + 2.0 * gen.uniform();
    const Matrix x1 = gen.normal_matrix(n, p), x2 = gen.normal_matrix(n, q);
    Vector w1(p), w2(q);
    for (int j = 0; j < p; ++j)
      w1[j] = 0.25 + gen.uniform();
    for (int j = 0; j < q; ++j)
      w2[j] = 0.25 + gen.uniform();
    const Matrix m = centered_info(x1);
    const Matrix r = *residual_potential_gram(x1, x2);
    const auto prior = sample_prior(q, tau2, 10, static_cast<std::uint64_t>(rep));

    track("phi_ds", phi_ds(m), oracle::phi_ds(x1));
    track("phi_l", phi_l(m, w1), oracle::phi_l(x1, w1));
    track("phi_dp", phi_dp(phi_ds(m), p, pe_df, alpha), oracle::phi_dp(x1, pe_df, alpha));
    track("phi_lp", phi_lp(phi_l(m, w1), pe_df, alpha), oracle::phi_lp(x1, w1, pe_df, alpha));
    track("phi_lof_dp", phi_lof_dp(r, pe_df, alpha, tau2),
          oracle::phi_lof_dp(x1, x2, pe_df, alpha, tau2));
    track("phi_lof_lp", phi_lof_lp(r, w2, pe_df, alpha, tau2),
          oracle::phi_lof_lp(x1, x2, w2, pe_df, alpha, tau2));
    track("phi_mse_d_mc", phi_mse_d_mc(m, x1, x2, prior),
          oracle::phi_mse_d(x1, x2, prior.draws));
    track("phi_mse_d_point", phi_mse_d_point(m, x1, x2, tau2),
          oracle::phi_mse_d(x1, x2, Matrix::Constant(1, q, std::sqrt(tau2))));
    track("phi_mse_l", phi_mse_l(m, x1, x2, w1, tau2), oracle::phi_mse_l(x1, x2, w1, tau2));
  }
  Outcome o;
  double overall = 0.0;
  for (const auto &[name, err] : worst) {
    o.require(err < 1e-8, name + " relative error " + num(err));
    overall = std::max(overall, err);
  }
  o.note("9 criteria x 100 instances, max relative error " + num(overall, "%.2e"));
  return o;
}

Outcome f_quantiles() {
  Outcome o;
  struct Triple {
    int d1, d2;
    double prob;
  };
  std::vector<Triple> triples{{1, 10, 0.95}, {5, 5, 0.95}};
  oracle::Gen gen(303);
  while (triples.size() < 50)
    triples.push_back({gen.integer(1, 40), gen.integer(1, 80), 0.01 + 0.98 * gen.uniform()});
  double worst = 0.0;
  for (const auto &t : triples)
    worst = std::max(worst,
                     std::abs(f_quantile(t.d1, t.d2, t.prob) - oracle::f_quantile(t.d1, t.d2, t.prob)));
  o.require(worst < 1e-6, "absolute error " + num(worst));
  const double a = f_quantile(1, 10, 0.95), b = f_quantile(5, 5, 0.95);
  o.require(num(a, "%.4f") == "4.9646", "F(1,10;0.95) = " + num(a, "%.6f"));
  o.require(num(b, "%.4f") == "5.0503", "F(5,5;0.95) = " + num(b, "%.6f"));
  o.note("50 triples, max abs error " + num(worst, "%.2e") + ", F(1,10)=" + num(a, "%.4f") +
         ", F(5,5)=" + num(b, "%.4f"));
  return o;
}

Outcome two_factor_example() {
  auto spec = make_spec(2, 3, 24, {"main_effects"}, {"quadratic_terms"}, Family::mse_d,
                        {1.0 / 3, 1.0 / 3, 1.0 / 3});
  spec.criterion.mc_samples = 1000;
  SearchOptions opt;
  opt.restarts = 10;
  opt.seed = 20240601;
  opt.algorithm = Algorithm::ptex;
  opt.workers = 0;
  const auto res = multi_start(spec, opt);
  Outcome o;
  o.require(res.compound_value >= 0.185 && res.compound_value <= 0.192,
            "best compound " + num(res.compound_value) + " outside [0.185, 0.192]");
  o.require(res.design.valid_for(spec.grid) && res.design.runs() == 24, "design off the 3x3 grid");
  o.require(res.breakdown.pe_df >= 1, "pe_df = " + std::to_string(res.breakdown.pe_df));
  std::string path;
  for (double v : res.path)
    path += (path.empty() ? "" : " ") + num(v, "%.4f");
  o.note("best " + num(res.compound_value, "%.4f") + ", pe_df " +
         std::to_string(res.breakdown.pe_df) + ", path [" + path + "]");
  return o;
}

Outcome desk_scale_table() {
  const std::vector<Kappa> kappas{{1, 0, 0}, {0, 0, 1}, {0.4, 0.2, 0.4}};
  std::vector<json> records;
  std::vector<SearchResult> results;
  for (const auto &k : kappas) {
    RunConfig cfg;
    cfg.spec = make_spec(3, 5, 36, {"second_order"}, {"cubic_terms", "third_order_terms"},
                         Family::mse_p, k);
    cfg.search.restarts = 50;
    cfg.search.seed = 4141;
    cfg.search.workers = 0;
    results.push_back(multi_start(cfg.spec, cfg.search));
    records.push_back(search_record(cfg, results.back()));
  }
  const auto table = efficiency_table(records);
  const auto &dp = results[0].breakdown, &mix = results[2].breakdown;
  const auto &eff = table.rows[2];
  Outcome o;
  o.require(dp.pe_df >= 21 && dp.pe_df <= 23, "DP design pe_df " + std::to_string(dp.pe_df));
  o.require(dp.lof_df >= 3 && dp.lof_df <= 5, "DP design lof_df " + std::to_string(dp.lof_df));
  o.require(mix.pe_df >= 15 && mix.pe_df <= 19,
            "compound design pe_df " + std::to_string(mix.pe_df));
  o.require(eff.primary && *eff.primary >= 85.0,
            "compound DP efficiency " + (eff.primary ? num(*eff.primary, "%.2f") : "-"));
  o.require(eff.mse && *eff.mse >= 95.0,
            "compound MSE efficiency " + (eff.mse ? num(*eff.mse, "%.2f") : "-"));
  o.note("DP design pe/lof " + std::to_string(dp.pe_df) + "/" + std::to_string(dp.lof_df) +
         ", MSE design pe/lof " + std::to_string(results[1].breakdown.pe_df) + "/" +
         std::to_string(results[1].breakdown.lof_df) + ", compound pe/lof " +
         std::to_string(mix.pe_df) + "/" + std::to_string(mix.lof_df) + ", compound eff DP " +
         (eff.primary ? num(*eff.primary, "%.2f") : "-") + " MSE " +
         (eff.mse ? num(*eff.mse, "%.2f") : "-"));
  std::printf("%s", format_efficiency_table(table).c_str());
  return o;
}

Outcome plackett_burman() {
  Outcome o;
  auto run = [](Kappa k) {
    const auto spec = make_spec(4, 2, 12, {"main_effects"}, {"linear_interactions"},
                                Family::mse_l, k);
    SearchOptions opt;
    opt.restarts = 200;
    opt.seed = 1212;
    opt.algorithm = Algorithm::ptex;
    opt.workers = 0;
    return std::pair{spec, multi_start(spec, opt)};
  };

  const auto [cspec, compound] = run({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto mm = model_matrices(compound.design, cspec.primary, cspec.potential, cspec.grid);
  const auto alias = alias_matrix(mm.primary, mm.potential);
  const double alias_max = alias ? alias->cwiseAbs().maxCoeff() : kInf;
  const int t_compound = distinct_rows(compound.design);
  o.require(alias_max < 1e-12, "compound alias max |entry| " + num(alias_max));
  o.require(t_compound >= 7 && t_compound <= 9,
            "compound design has " + std::to_string(t_compound) + " treatments");

  const int t_lp = distinct_rows(run({1, 0, 0}).second.design);
  o.require(t_lp <= 6, "LP design has " + std::to_string(t_lp) + " treatments");
  const int t_mse = distinct_rows(run({0, 0, 1}).second.design);
  o.require(t_mse >= 11, "MSE(L) design has " + std::to_string(t_mse) + " treatments");

  // evaluate the stored Plackett-Burman projection through the eval command
  const auto dir = std::filesystem::temp_directory_path() / "rsdesign_acceptance_pb";
  std::filesystem::create_directories(dir);
  json cfg = to_json(RunConfig{cspec, {}, dir});
  {
    std::ofstream(dir / "config.json") << cfg.dump(2);
  }
  cli::Overrides ev;
  ev.out = dir;
  std::ostringstream out, err;
  const int status = cli::cmd_eval(dir / "config.json",
                                   std::filesystem::path(RSD_DATA_DIR) / "pb12_k4.csv", ev, out,
                                   err);
  o.require(status == cli::kOk, "eval failed: " + err.str());
  int third = 0, zero = 0, other = 0;
  if (status == cli::kOk) {
    std::ifstream in(dir / "eval.json");
    const json rec = json::parse(in);
    const auto inter = cspec.potential.terms();
    for (int i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < inter.size(); ++c) {
        const double v = rec["alias"][static_cast<std::size_t>(i)][c].get<double>();
        const bool involves = inter[c].exponents[static_cast<std::size_t>(i)] != 0;
        if (!involves && std::abs(std::abs(v) - 1.0 / 3.0) < 1e-12)
          ++third;
        else if (involves && std::abs(v) < 1e-12)
          ++zero;
        else
          ++other;
      }
    o.require(other == 0, std::to_string(other) + " alias entries are neither +-1/3 nor 0");
    o.note("PB pe_df " + std::to_string(rec["breakdown"]["pe_df"].get<int>()));
  }
  o.note("compound t=" + std::to_string(t_compound) + " alias max " + num(alias_max, "%.1e") +
         ", LP t=" + std::to_string(t_lp) + ", MSE(L) t=" + std::to_string(t_mse) +
         ", PB alias entries +-1/3: " + std::to_string(third) + ", 0 (own factor): " +
         std::to_string(zero));
  return o;
}

Outcome search_properties() {
  Outcome o;
  auto spec = make_spec(2, 3, 14, {"main_effects"}, {"quadratic_terms", "linear_interactions"},
                        Family::mse_d, {0.4, 0.3, 0.3});
  spec.criterion.mc_samples = 100;
  const CompoundEvaluator eval(spec, prior_for(spec, 77));
  const auto cands = build_candidates(spec.grid);

  bool monotone = true, fixed = true;
  for (int r = 0; r < 20; ++r) {
    CounterRng rng(derive_key(77, restart_stream(static_cast<std::uint64_t>(r))));
    const Design start = random_start(spec.grid, spec.runs, rng);
    for (bool ptex : {true, false}) {
      CompoundObjective obj(eval);
      const auto res =
          ptex ? point_exchange(start, cands, obj) : coordinate_exchange(start, spec.grid, obj);
      for (std::size_t i = 1; i < res.history.size(); ++i)
        monotone = monotone && res.history[i] < res.history[i - 1];
      CompoundObjective again(eval);
      const auto re = ptex ? point_exchange(res.design, cands, again)
                           : coordinate_exchange(res.design, spec.grid, again);
      fixed = fixed && res.converged && re.design == res.design && re.history.size() == 1;
    }
  }
  o.require(monotone, "exchange history not strictly decreasing");
  o.require(fixed, "converged design is not a fixed point");

  SearchOptions opt;
  opt.restarts = 12;
  opt.seed = 77;
  opt.workers = 1;
  const auto one = multi_start(eval, opt);
  const double best = *std::min_element(one.path.begin(), one.path.end());
  const double recomputed = eval.evaluate(one.design).compound();
  o.require(one.compound_value == best && std::abs(recomputed - best) <= 1e-12 * best,
            "best-of-restarts identity");

  opt.workers = static_cast<int>(std::max(2u, std::thread::hardware_concurrency()));
  const auto many = multi_start(eval, opt);
  RunConfig cfg{spec, opt, "out"};
  cfg.search.workers = 1;
  const std::string a = design_csv(one.design, spec.grid) + search_record(cfg, one).dump();
  const std::string b = design_csv(many.design, spec.grid) + search_record(cfg, many).dump();
  o.require(a == b, "results differ between 1 and " + std::to_string(opt.workers) + " workers");

  // brute force: one factor, three levels, three runs
  auto tiny = make_spec(1, 3, 3, {"main_effects"}, {"quadratic_terms"}, Family::mse_p,
                        {0.5, 0.0, 0.5});
  const CompoundEvaluator tiny_eval(tiny, prior_for(tiny, 0));
  double enumerated = kInf;
  for (int code = 0; code < 27; ++code) {
    Design d(3, 1);
    d.at(0, 0) = code % 3;
    d.at(1, 0) = code / 3 % 3;
    d.at(2, 0) = code / 9;
    enumerated = std::min(enumerated, tiny_eval.evaluate(d).compound());
  }
  SearchOptions tiny_opt;
  tiny_opt.restarts = 10;
  tiny_opt.seed = 3;
  const double found = multi_start(tiny_eval, tiny_opt).compound_value;
  o.require(std::abs(found - enumerated) <= 1e-12 * enumerated,
            "toy search " + num(found) + " vs enumeration " + num(enumerated));
  o.note("40 exchanges monotone and fixed; 1 vs " + std::to_string(opt.workers) +
         " workers identical; toy optimum " + num(enumerated));
  return o;
}

Outcome df_accounting() {
  Outcome o;
  oracle::Gen gen(808);
  int checked = 0, violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int k = gen.integer(2, 6);
    const FactorGrid grid(k, gen.integer(2, 5));
    const int n = gen.integer(2, 40);
    const int p = gen.integer(1, std::min(2 * k + k * (k - 1) / 2, n - 1));
    Design d(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j)
        d.at(i, j) = gen.integer(0, grid.levels(j) - 1);
    const auto s = replication_summary(d, grid, p);
    if (s.treatments >= p + 1) {
      ++checked;
      if (s.pure_error_df + s.lack_of_fit_df != n - p - 1)
        ++violations;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " df identity violations");
  o.require(checked >= 500, "only " + std::to_string(checked) + " designs had t >= p + 1");

  int grids = 0;
  bool bijective = true;
  for (int k = 1; k <= 4; ++k)
    for (int levels = 2; levels <= 5; ++levels) {
      const FactorGrid grid(k, levels);
      const auto cands = build_candidates(grid);
      std::set<std::vector<int>> rows(cands.rows.begin(), cands.rows.end());
      bijective = bijective && rows.size() == grid.combinations();
      for (std::uint64_t label = 1; label <= grid.combinations(); ++label)
        bijective = bijective && treatment_label(treatment_of_label(label, grid), grid) == label;
      ++grids;
    }
  o.require(bijective, "label round trip");
  o.note(std::to_string(checked) + " designs with t >= p + 1, labels bijective on " +
         std::to_string(grids) + " grids up to 5^4");
  return o;
}

struct Criterion {
  const char *title;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv) {
  const std::map<int, Criterion> criteria{
      {1, {"determinant lemma identity", determinant_lemma}},
      {2, {"criterion oracles", criterion_oracles}},
      {3, {"F quantile accuracy", f_quantiles}},
      {4, {"two-factor MSE.D example", two_factor_example}},
      {5, {"three-factor efficiency table", desk_scale_table}},
      {6, {"Plackett-Burman structure", plackett_burman}},
      {7, {"search properties", search_properties}},
      {8, {"df accounting and labels", df_accounting}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto &[id, c] : criteria)
      selected.push_back(id);

  int failures = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("criterion %d: unknown\n", id);
      ++failures;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s (%.1f s) -- %s\n", id, o.pass ? "PASS" : "FAIL",
                it->second.title, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
