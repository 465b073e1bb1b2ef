#include "hedgemax/game.hpp"
#include "hedgemax/solver.hpp"
#include "hedgemax/treatment.hpp"
#include "hedgemax/sites.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hedgemax;

namespace {

py::dict pack(const SolverResult& res) {
  py::dict d;
  d["value"] = value_estimate(res.trace);
  d["lower"] = res.lower_bound;
  d["upper"] = res.upper_bound;
  d["epochs"] = res.trace.epochs;
  d["certified"] = res.certified;
  d["p"] = res.p_epsilon.w;
  d["lfd"] = extract_lfd(res.trace);
  return d;
}

SolverConfig make_cfg(double epsilon, double M, std::int64_t num_rules, bool early_stop,
                      std::uint64_t seed) {
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = M;
  cfg.num_rules = num_rules;
  cfg.early_stop = early_stop;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "epsilon-minimax solver for statistical decision problems";

  m.def(
      "schedule",
      [](double epsilon, double M, std::int64_t num_rules) {
        auto s = compute_schedule(epsilon, M, num_rules);
        return py::make_tuple(s.eta, s.epochs);
      },
      py::arg("epsilon"), py::arg("M"), py::arg("num_rules"),
      "learning rate and epoch count for a target accuracy");

  m.def(
      "solve_mmr",
      [](std::vector<double> thresholds, double sigma, double k, double epsilon,
         bool early_stop, std::uint64_t seed) {
        treatment::MMRProblem prob;
        prob.thresholds = std::move(thresholds);
        prob.sigma = sigma;
        prob.k = k;
        treatment::MmrOracle oracle(prob);
        auto cfg = make_cfg(epsilon, oracle.risk_bound(),
                            (std::int64_t)prob.thresholds.size(), early_stop, seed);
        return pack(hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); }, cfg));
      },
      py::arg("thresholds"), py::arg("sigma"), py::arg("k"), py::arg("epsilon"),
      py::arg("early_stop") = true, py::arg("seed") = 0,
      "minimax-regret mixture over a menu of threshold rules");

  m.def(
      "solve_rb",
      [](std::vector<double> thresholds, double sigma, double k, double mu_bar,
         double epsilon, bool early_stop, std::uint64_t seed) {
        treatment::RobustBayesProblem prob;
        prob.thresholds = std::move(thresholds);
        prob.sigma = sigma;
        prob.k = k;
        prob.mu_bar = mu_bar;
        treatment::RbOracle oracle(prob);
        auto cfg = make_cfg(epsilon, oracle.risk_bound(),
                            (std::int64_t)prob.thresholds.size(), early_stop, seed);
        return pack(hedge_solve([&oracle](const SimplexPoint& p) { return oracle(p); }, cfg));
      },
      py::arg("thresholds"), py::arg("sigma"), py::arg("k"), py::arg("mu_bar"),
      py::arg("epsilon"), py::arg("early_stop") = true, py::arg("seed") = 0,
      "worst-case Bayes mixture under the symmetric two-point prior");

  m.def("rho_star", &treatment::rho_star, py::arg("sigma"), py::arg("k"),
        "slope parameter of the interpolated rule");
  m.def(
      "rb_rho_star",
      [](double sigma, double k, double mu_bar) {
        auto r = treatment::rb_rho_star(sigma, k, mu_bar);
        return py::make_tuple(r.rho, r.rho_adjusted);
      },
      py::arg("sigma"), py::arg("k"), py::arg("mu_bar"),
      "slope parameters of the prior-averaged rule");
  m.def("mqs_rule", &treatment::mqs_rule, py::arg("mu_hat"), py::arg("rho"),
        "treatment probability of the interpolated rule");
  m.def("mmr_risk_bound", &treatment::mmr_risk_bound, py::arg("sigma"), py::arg("k"),
        "uniform regret bound over the threshold class");

  m.def(
      "lp_minimax",
      [](std::vector<std::vector<double>> risk, double M) {
        game::MatrixGame g;
        g.risk = std::move(risk);
        g.M = M;
        auto s = game::lp_minimax(g);
        py::dict d;
        d["value"] = s.value;
        d["p"] = s.p.w;
        d["q"] = s.q.w;
        return d;
      },
      py::arg("risk"), py::arg("M"), "exact matrix-game saddle point");

  m.def(
      "solve_game",
      [](std::vector<std::vector<double>> risk, double M, double epsilon, bool early_stop,
         std::uint64_t seed) {
        game::MatrixGame g;
        g.risk = std::move(risk);
        g.M = M;
        auto cfg = make_cfg(epsilon, M, g.rows(), early_stop, seed);
        return pack(hedge_solve(game::make_matrix_oracle(g), cfg));
      },
      py::arg("risk"), py::arg("M"), py::arg("epsilon"), py::arg("early_stop") = true,
      py::arg("seed") = 0, "iterative mixture for the row player of a matrix game");

  m.def("epsilon_for_runtime", &sites::epsilon_for_runtime, py::arg("M"),
        py::arg("num_rules"), py::arg("budget_seconds"), py::arg("per_call_seconds"),
        "accuracy affordable within a wall-clock budget");
}
