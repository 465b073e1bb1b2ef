#pragma once

#include "hedgemax/core.hpp"

namespace hedgemax {

struct Schedule {
  double eta = 0.0;
  std::int64_t epochs = 0;
};

// eta = eps / M^2, T = ceil(2 M^2 ln(I) / eps^2); I = 1 needs no iterations
Schedule compute_schedule(double epsilon, double M, std::int64_t num_rules);

// one multiplicative-weights step: log_w_i -= eta * g_i, epoch += 1
void update_weights(LogWeights& lw, const std::vector<double>& g, double eta);

// softmax of the log-weights with a max shift, so scale never drifts
SimplexPoint normalize(const LogWeights& lw);

SolverResult hedge_solve(const RiskOracle& oracle, const SolverConfig& cfg);
SolverResult hedge_solve_stochastic(const StochasticOracle& oracle, const SolverConfig& cfg);

// mean of the attained oracle values over the trace
double value_estimate(const Trace& trace);

// certificate at a candidate mixture: lower = best per-rule average so far,
// upper = a fresh oracle valuation of p_bar plus its declared slack
std::pair<double, double> duality_gap(const Trace& trace, const RiskOracle& oracle,
                                      const SimplexPoint& p_bar);

// empirical distribution of the adversary's picks, as (label, probability)
std::vector<std::pair<std::string, double>> extract_lfd(const Trace& trace);

// largest violation of the averaged regret inequality across rules; a genuine
// run keeps this at numerical noise no matter what the oracle returned
double regret_inequality_check(const Trace& trace, double eta, double M,
                               std::int64_t num_rules);

}  // namespace hedgemax
