#include "CLI11.hpp"
#include "hedgemax/errors.hpp"
#include "hedgemax/export.hpp"
#include "hedgemax/game.hpp"
#include "hedgemax/sites.hpp"
#include "hedgemax/solver.hpp"
#include "hedgemax/treatment.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hedgemax;

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::string tok;
  std::stringstream ss(csv);
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated list of numbers, got '" + csv + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

void write_result_bundle(const SolverResult& res, const SolverConfig& cfg,
                         const std::string& problem, std::vector<std::string> labels,
                         const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto er = io::summarize(res, cfg, problem, std::move(labels));
  write_text(fs::path(out_dir) / "result.json", io::to_json(er).dump(2) + "\n");
  io::write_trace_csv(res.trace, (fs::path(out_dir) / "trace.csv").string());
  io::write_gap_csv(res.trace, (fs::path(out_dir) / "gap.csv").string());
}

// mixture of step rules evaluated at one estimate
double menu_rule(const std::vector<double>& thresholds, const std::vector<double>& p,
                 double mu_hat) {
  double r = 0.0;
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    if (mu_hat >= thresholds[i]) r += p[i];
  return r;
}

void write_rule_curve(const std::vector<double>& thresholds, const std::vector<double>& p,
                      double mu_min, double mu_max, int steps, const fs::path& path) {
  std::string body = "mu_hat,treat_prob\n";
  for (int i = 0; i < steps; ++i) {
    const double mu =
        steps == 1 ? mu_min : mu_min + (mu_max - mu_min) * (double)i / (double)(steps - 1);
    body += fmt(mu) + "," + fmt(menu_rule(thresholds, p, mu)) + "\n";
  }
  write_text(path, body);
}

std::vector<std::string> numeric_labels(const std::vector<double>& vals) {
  std::vector<std::string> out;
  out.reserve(vals.size());
  for (double v : vals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    out.emplace_back(buf);
  }
  return out;
}

struct CurveRange {
  double mu_min = -3.0, mu_max = 3.0;
  int steps = 121;
};

int run_solve_mmr(const std::string& thresholds, double sigma, double k, double epsilon,
                  int grid, bool full_run, std::uint64_t seed, const std::string& out_dir,
                  const CurveRange& curve) {
  auto menu = parse_list(thresholds);
  treatment::MMRProblem prob;
  prob.thresholds = menu;
  prob.sigma = sigma;
  prob.k = k;
  treatment::MmrOracle oracle(prob, grid);

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = oracle.risk_bound();
  cfg.num_rules = (std::int64_t)menu.size();
  cfg.early_stop = !full_run;
  cfg.seed = seed;
  auto res = hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); }, cfg);

  write_result_bundle(res, cfg, "mmr", numeric_labels(menu), out_dir);
  write_rule_curve(menu, res.p_epsilon.w, curve.mu_min, curve.mu_max, curve.steps,
                   fs::path(out_dir) / "rule_curve.csv");
  std::cout << "value ~ " << value_estimate(res.trace) << " in [" << res.lower_bound << ", "
            << res.upper_bound << "] after " << res.trace.epochs << " epochs\n";
  return 0;
}

int run_solve_rb(const std::string& thresholds, double sigma, double k, double mu_bar,
                 double epsilon, bool stochastic, bool full_run, std::uint64_t seed,
                 const std::string& out_dir, const CurveRange& curve) {
  auto menu = parse_list(thresholds);
  treatment::RobustBayesProblem prob;
  prob.thresholds = menu;
  prob.sigma = sigma;
  prob.k = k;
  prob.mu_bar = mu_bar;
  treatment::RbOracle oracle(prob);

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = oracle.risk_bound();
  cfg.num_rules = (std::int64_t)menu.size();
  cfg.early_stop = !full_run;
  cfg.seed = seed;
  SolverResult res = stochastic
                         ? hedge_solve_stochastic(treatment::rb_gradient_sampler(prob), cfg)
                         : hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); },
                                       cfg);

  write_result_bundle(res, cfg, "rb", numeric_labels(menu), out_dir);
  write_rule_curve(menu, res.p_epsilon.w, curve.mu_min, curve.mu_max, curve.steps,
                   fs::path(out_dir) / "rule_curve.csv");
  std::cout << "value ~ " << value_estimate(res.trace) << " in [" << res.lower_bound << ", "
            << res.upper_bound << "] after " << res.trace.epochs << " epochs\n";
  return 0;
}

int run_solve_game(const std::string& matrix, double risk_bound, double epsilon,
                   bool full_run, std::uint64_t seed, const std::string& out_dir) {
  auto g = game::load_game_csv(matrix, risk_bound);
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = g.M;
  cfg.num_rules = g.rows();
  cfg.early_stop = !full_run;
  cfg.seed = seed;
  auto res = hedge_solve(game::make_matrix_oracle(g), cfg);
  write_result_bundle(res, cfg, "game", {}, out_dir);
  std::cout << "value in [" << res.lower_bound << ", " << res.upper_bound << "] after "
            << res.trace.epochs << " epochs\n";
  return 0;
}

int run_solve_sites(const std::string& sites_path, int anchor_site, double anchor_tau,
                    double epsilon, double smoothness, double calibrate_gap, int max_policy,
                    int ref_site, double runtime_budget, double per_call, bool full_run,
                    std::uint64_t seed, const std::string& out_dir) {
  auto data = sites::load_sites(sites_path, 1.0);
  if (smoothness > 0.0) {
    data.C = smoothness;
  } else {
    if (data.experimental.size() < 2)
      throw ConfigError("need two experimental sites to calibrate smoothness; pass "
                        "--smoothness instead");
    const int a = data.experimental[0], b = data.experimental[1];
    data.C = sites::calibrate_C(calibrate_gap, data.dist[a][b]);
  }
  if (max_policy > 0) data = sites::scenario_subset(data, max_policy, ref_site);
  if (anchor_site < 0 || anchor_site >= data.n())
    throw ConfigError("anchor site index out of range");

  const double box = sites::effect_bound(data, anchor_tau, anchor_site);
  SolverConfig cfg;
  cfg.M = box;
  cfg.num_rules = (std::int64_t)data.experimental.size();
  cfg.epsilon = runtime_budget > 0.0
                    ? sites::epsilon_for_runtime(box, cfg.num_rules, runtime_budget, per_call)
                    : epsilon;
  cfg.early_stop = !full_run;
  cfg.seed = seed;
  auto res = hedge_solve(sites::lipschitz_oracle(data, box), cfg);

  std::vector<std::string> labels;
  for (int e : data.experimental) labels.push_back(data.ids[e]);
  write_result_bundle(res, cfg, "sites", labels, out_dir);

  std::string sel = "site_id,probability\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    sel += labels[i] + "," + fmt(res.p_epsilon.w[i]) + "\n";
  write_text(fs::path(out_dir) / "selection.csv", sel);
  std::cout << "trial-site mixture over " << labels.size() << " candidates, regret in ["
            << res.lower_bound << ", " << res.upper_bound << "]\n";
  return 0;
}

int run_game_report(const std::string& matrix, double risk_bound, double epsilon,
                    std::uint64_t seed, const std::string& out_dir) {
  auto g = game::load_game_csv(matrix, risk_bound);
  auto lp = game::lp_minimax(g);

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = g.M;
  cfg.num_rules = g.rows();
  cfg.seed = seed;
  auto hedge = hedge_solve(game::make_matrix_oracle(g), cfg);
  auto mm = game::mirror_ascent_maximin(g, epsilon);

  const double tol = 1e-9;
  const bool agree = hedge.lower_bound <= lp.value + tol &&
                     hedge.upper_bound >= lp.value - tol && mm.lower <= lp.value + tol &&
                     mm.upper >= lp.value - tol;

  json j;
  j["schema_version"] = io::kSchemaVersion;
  j["epsilon"] = epsilon;
  j["lp_value"] = lp.value;
  j["lp_row_mixture"] = lp.p.w;
  j["lp_col_mixture"] = lp.q.w;
  j["hedge_lower"] = hedge.lower_bound;
  j["hedge_upper"] = hedge.upper_bound;
  j["maximin_lower"] = mm.lower;
  j["maximin_upper"] = mm.upper;
  j["maximin_col_mixture"] = mm.q.w;
  j["brackets_agree"] = agree;
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "game_report.json", j.dump(2) + "\n");
  std::cout << "lp value " << lp.value << "; hedge [" << hedge.lower_bound << ", "
            << hedge.upper_bound << "]; maximin [" << mm.lower << ", " << mm.upper << "]\n";
  return 0;
}

int run_compare(bool use_rb, int menu_size, double menu_lo, double menu_hi, double sigma,
                double k, double mu_bar, double epsilon, const CurveRange& curve,
                std::uint64_t seed, const std::string& out_dir) {
  auto menu = treatment::uniform_menu(menu_size, menu_lo, menu_hi);

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.num_rules = (std::int64_t)menu.size();
  cfg.seed = seed;
  SolverResult res;
  double rho = 0.0;
  if (use_rb) {
    treatment::RobustBayesProblem prob;
    prob.thresholds = menu;
    prob.sigma = sigma;
    prob.k = k;
    prob.mu_bar = mu_bar;
    treatment::RbOracle oracle(prob);
    cfg.M = oracle.risk_bound();
    res = hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); }, cfg);
    rho = treatment::rb_rho_star(sigma, k, mu_bar).rho_adjusted;
  } else {
    treatment::MMRProblem prob;
    prob.thresholds = menu;
    prob.sigma = sigma;
    prob.k = k;
    treatment::MmrOracle oracle(prob);
    cfg.M = oracle.risk_bound();
    res = hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); }, cfg);
    rho = treatment::rho_star(sigma, k);
  }

  fs::create_directories(out_dir);
  std::string body = "mu_hat,solver_rule,exact_rule\n";
  for (int i = 0; i < curve.steps; ++i) {
    const double mu = curve.steps == 1 ? curve.mu_min
                                       : curve.mu_min + (curve.mu_max - curve.mu_min) *
                                                            (double)i / (double)(curve.steps - 1);
    body += fmt(mu) + "," + fmt(menu_rule(menu, res.p_epsilon.w, mu)) + "," +
            fmt(treatment::mqs_rule(mu, rho)) + "\n";
  }
  write_text(fs::path(out_dir) / "compare.csv", body);
  std::cout << "wrote " << curve.steps << " comparison points (slope parameter " << rho
            << ")\n";
  return 0;
}

int run_sites_prep(bool synthetic, std::uint64_t seed, const std::string& out) {
  if (!synthetic)
    throw ConfigError("only --synthetic generation is supported; supply your own csv "
                      "otherwise");
  auto data = sites::synthetic_sites(seed);
  sites::write_sites_csv(data, out);
  std::cout << "wrote " << data.n() << " sites to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedgemax: epsilon-minimax solver for statistical decision problems"};

  // ---- solve ----------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run the solver on one problem");
  solve->require_subcommand(1);

  std::string thresholds = "-1,0,1", out_dir = "out";
  double sigma = 1.0, k = 1.0, mu_bar = 0.5, epsilon = 0.1;
  int grid = 4096;
  bool full_run = false, stochastic = false;
  std::uint64_t seed = 0;
  CurveRange curve;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--epsilon", epsilon, "target accuracy");
    c->add_option("--out-dir", out_dir, "output directory");
    c->add_option("--seed", seed, "rng seed recorded with the run");
    c->add_flag("--full-run", full_run, "disable early stopping");
  };
  auto add_curve = [&](CLI::App* c) {
    c->add_option("--mu-min", curve.mu_min, "left end of the estimate grid");
    c->add_option("--mu-max", curve.mu_max, "right end of the estimate grid");
    c->add_option("--mu-steps", curve.steps, "points on the estimate grid");
  };

  auto* s_mmr = solve->add_subcommand("mmr", "minimax regret over a threshold menu");
  s_mmr->add_option("--thresholds", thresholds, "comma-separated menu of cutoffs");
  s_mmr->add_option("--sigma", sigma, "noise scale of the estimate");
  s_mmr->add_option("--k", k, "radius of the effect neighborhood");
  s_mmr->add_option("--grid", grid, "adversary grid resolution");
  add_common(s_mmr);
  add_curve(s_mmr);

  auto* s_rb = solve->add_subcommand("rb", "robust two-point-prior variant");
  s_rb->add_option("--thresholds", thresholds, "comma-separated menu of cutoffs");
  s_rb->add_option("--sigma", sigma, "noise scale of the estimate");
  s_rb->add_option("--k", k, "radius of the effect neighborhood");
  s_rb->add_option("--mu-bar", mu_bar, "location of the symmetric prior");
  s_rb->add_flag("--stochastic", stochastic, "use single-branch sampled responses");
  add_common(s_rb);
  add_curve(s_rb);

  std::string matrix_path = "game.csv";
  double risk_bound = -1.0;
  auto* s_game = solve->add_subcommand("game", "finite matrix game from csv");
  s_game->add_option("--matrix", matrix_path, "comma-separated payoff rows")->required();
  s_game->add_option("--risk-bound", risk_bound, "declared entry bound (default: max entry)");
  add_common(s_game);

  std::string sites_path = "sites.csv";
  int anchor_site = 0, max_policy = 0, ref_site = 0;
  double anchor_tau = 2.0, smoothness = 0.0, calibrate_gap = 9.2;
  double runtime_budget = 0.0, per_call = 0.05;
  auto* s_sites = solve->add_subcommand("sites", "trial-site selection from a panel");
  s_sites->add_option("--sites", sites_path, "site panel csv")->required();
  s_sites->add_option("--anchor-site", anchor_site, "site whose effect is pinned");
  s_sites->add_option("--anchor-tau", anchor_tau, "pinned effect value");
  s_sites->add_option("--smoothness", smoothness,
                      "Lipschitz constant (default: calibrate from the first two "
                      "experimental sites)");
  s_sites->add_option("--calibrate-gap", calibrate_gap,
                      "effect contrast used for calibration");
  s_sites->add_option("--max-policy", max_policy, "restrict to the n nearest policy sites");
  s_sites->add_option("--ref-site", ref_site, "reference site for the restriction");
  s_sites->add_option("--runtime-budget", runtime_budget,
                      "derive accuracy from a wall-clock budget in seconds");
  s_sites->add_option("--per-call", per_call, "assumed seconds per oracle call");
  add_common(s_sites);

  // ---- game report ----------------------------------------------------
  auto* g_cmd = app.add_subcommand("game", "solve a matrix game exactly and iteratively");
  g_cmd->add_option("--matrix", matrix_path, "comma-separated payoff rows")->required();
  g_cmd->add_option("--risk-bound", risk_bound, "declared entry bound (default: max entry)");
  g_cmd->add_option("--epsilon", epsilon, "accuracy for the iterative passes");
  g_cmd->add_option("--out-dir", out_dir, "output directory");
  g_cmd->add_option("--seed", seed, "rng seed recorded with the run");

  // ---- compare --------------------------------------------------------
  auto* cmp = app.add_subcommand("compare", "solver rule vs closed-form rule");
  cmp->require_subcommand(1);
  int menu_size = 21;
  double menu_lo = -3.0, menu_hi = 3.0;
  auto add_cmp = [&](CLI::App* c) {
    c->add_option("--menu-size", menu_size, "number of thresholds");
    c->add_option("--menu-lo", menu_lo, "lowest threshold");
    c->add_option("--menu-hi", menu_hi, "highest threshold");
    c->add_option("--sigma", sigma, "noise scale of the estimate");
    c->add_option("--k", k, "radius of the effect neighborhood");
    c->add_option("--epsilon", epsilon, "target accuracy");
    c->add_option("--out-dir", out_dir, "output directory");
    c->add_option("--seed", seed, "rng seed recorded with the run");
    add_curve(c);
  };
  auto* c_mmr = cmp->add_subcommand("mmr", "against the interpolated minimax-regret rule");
  add_cmp(c_mmr);
  auto* c_rb = cmp->add_subcommand("rb", "against the robust-prior slope rule");
  add_cmp(c_rb);
  c_rb->add_option("--mu-bar", mu_bar, "location of the symmetric prior");

  // ---- sites-prep -----------------------------------------------------
  auto* prep = app.add_subcommand("sites-prep", "generate a site panel csv");
  bool synthetic = false;
  std::string prep_out = "sites.csv";
  std::uint64_t prep_seed = 17;
  prep->add_flag("--synthetic", synthetic, "use the built-in synthetic panel");
  prep->add_option("--seed", prep_seed, "generator seed");
  prep->add_option("--out", prep_out, "destination csv");

  if (argc == 1) {
    std::cout << app.help();
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*s_mmr)
      return run_solve_mmr(thresholds, sigma, k, epsilon, grid, full_run, seed, out_dir,
                           curve);
    if (*s_rb)
      return run_solve_rb(thresholds, sigma, k, mu_bar, epsilon, stochastic, full_run, seed,
                          out_dir, curve);
    if (*s_game)
      return run_solve_game(matrix_path, risk_bound, epsilon, full_run, seed, out_dir);
    if (*s_sites)
      return run_solve_sites(sites_path, anchor_site, anchor_tau, epsilon, smoothness,
                             calibrate_gap, max_policy, ref_site, runtime_budget, per_call,
                             full_run, seed, out_dir);
    if (*g_cmd) return run_game_report(matrix_path, risk_bound, epsilon, seed, out_dir);
    if (*c_mmr || *c_rb)
      return run_compare(bool(*c_rb), menu_size, menu_lo, menu_hi, sigma, k, mu_bar, epsilon,
                         curve, seed, out_dir);
    if (*prep) return run_sites_prep(synthetic, prep_seed, prep_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << app.help();
  return 0;
}
