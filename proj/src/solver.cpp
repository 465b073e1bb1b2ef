#include "hedgemax/solver.hpp"

#include "hedgemax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace hedgemax {

void SimplexPoint::validate(double tol) const {
  if (w.empty()) throw NumericalFailure("empty mixture");
  double s = 0.0;
  for (double v : w) {
    if (!std::isfinite(v)) throw NumericalFailure("non-finite mixture weight");
    if (v < -tol) throw NumericalFailure("negative mixture weight");
    s += v;
  }
  if (std::abs(s - 1.0) > std::max(tol, 1e-15 * (double)w.size()))
    throw NumericalFailure("mixture mass " + std::to_string(s) + " is not 1");
}

void SolverConfig::validate() const {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (!std::isfinite(M) || M <= 0.0) throw ConfigError("risk bound M must be positive");
  if (epsilon > M) throw ConfigError("epsilon exceeds the risk bound M");
  if (num_rules < 1) throw ConfigError("need at least one rule");
  if (gap_check_period < 1) throw ConfigError("gap_check_period must be at least 1");
  if (max_epochs && *max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
}

Schedule compute_schedule(double epsilon, double M, std::int64_t num_rules) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (!std::isfinite(M) || M <= 0.0) throw ConfigError("risk bound M must be positive");
  if (epsilon > M) throw ConfigError("epsilon exceeds the risk bound M");
  if (num_rules < 1) throw ConfigError("need at least one rule");
  Schedule s;
  s.eta = epsilon / (M * M);
  s.epochs = num_rules == 1
                 ? 0
                 : (std::int64_t)std::ceil(2.0 * M * M * std::log((double)num_rules) /
                                           (epsilon * epsilon));
  return s;
}

void update_weights(LogWeights& lw, const std::vector<double>& g, double eta) {
  if (lw.log_w.size() != g.size()) throw ContractViolation("risk vector size mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) lw.log_w[i] -= eta * g[i];
  ++lw.epoch;
}

SimplexPoint normalize(const LogWeights& lw) {
  if (lw.log_w.empty()) throw NumericalFailure("no weights to normalize");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : lw.log_w) {
    if (std::isnan(v)) throw NumericalFailure("non-finite log-weight");
    m = std::max(m, v);
  }
  if (!std::isfinite(m)) throw NumericalFailure("all log-weights are -inf");
  SimplexPoint p;
  p.w.resize(lw.log_w.size());
  double z = 0.0;
  for (std::size_t i = 0; i < lw.log_w.size(); ++i) z += (p.w[i] = std::exp(lw.log_w[i] - m));
  for (double& v : p.w) v /= z;
  return p;
}

double value_estimate(const Trace& trace) {
  if (trace.epochs <= 0 || trace.achieved.empty()) throw ConfigError("empty trace");
  double s = 0.0;
  for (double a : trace.achieved) s += a;
  return s / (double)trace.epochs;
}

std::vector<std::pair<std::string, double>> extract_lfd(const Trace& trace) {
  if (trace.epochs <= 0 || trace.theta_ids.empty()) throw ConfigError("empty trace");
  std::vector<std::pair<std::string, double>> out;
  out.reserve(trace.theta_ids.size());
  for (std::size_t k = 0; k < trace.theta_ids.size(); ++k)
    out.emplace_back(trace.theta_ids[k], (double)trace.theta_counts[k] / (double)trace.epochs);
  return out;
}

double regret_inequality_check(const Trace& trace, double eta, double M,
                               std::int64_t num_rules) {
  if (trace.epochs <= 0 || trace.achieved.empty()) throw ConfigError("empty trace");
  if ((std::int64_t)trace.risk_sum.size() != num_rules)
    throw ConfigError("trace does not match the stated number of rules");
  if (!(eta > 0.0) || !(M > 0.0)) throw ConfigError("eta and M must be positive");
  const double T = (double)trace.epochs;
  const double mean = value_estimate(trace);
  const double slack = M * M * eta / 2.0 + std::log((double)num_rules) / (T * eta);
  double worst = -std::numeric_limits<double>::infinity();
  for (double rs : trace.risk_sum) worst = std::max(worst, mean - rs / T - slack);
  return worst;
}

std::pair<double, double> duality_gap(const Trace& trace, const RiskOracle& oracle,
                                      const SimplexPoint& p_bar) {
  if (trace.epochs <= 0 || trace.risk_sum.empty()) throw ConfigError("empty trace");
  double lo = std::numeric_limits<double>::infinity();
  for (double rs : trace.risk_sum) lo = std::min(lo, rs / (double)trace.epochs);
  OracleResponse r = oracle(p_bar);
  if (r.risk.size() != p_bar.w.size())
    throw ContractViolation("oracle risk vector does not match the mixture");
  double dot = 0.0;
  for (std::size_t i = 0; i < r.risk.size(); ++i) dot += p_bar.w[i] * r.risk[i];
  return {lo, dot + r.delta};
}

namespace {

template <class Call>
SolverResult run_hedge(Call&& call, const SolverConfig& cfg, bool stochastic) {
  cfg.validate();
  const Schedule sch = compute_schedule(cfg.epsilon, cfg.M, cfg.num_rules);
  const std::int64_t I = cfg.num_rules;
  const double rtol = 1e-9 * std::max(1.0, cfg.M);

  SolverResult out;
  out.scheduled_epochs = sch.epochs;
  out.eta = sch.eta;
  out.stochastic = stochastic;
  Trace& tr = out.trace;
  tr.risk_sum.assign(I, 0.0);

  std::mt19937_64 rng(cfg.seed);
  std::unordered_map<std::string, std::int32_t> theta_index;

  auto check = [&](const OracleResponse& r, std::int64_t epoch) {
    const std::string at = " at epoch " + std::to_string(epoch);
    if ((std::int64_t)r.risk.size() != I)
      throw ContractViolation("oracle returned " + std::to_string(r.risk.size()) +
                              " risks for " + std::to_string(I) + " rules" + at);
    for (double v : r.risk)
      if (!std::isfinite(v) || v < -rtol || v > cfg.M + rtol)
        throw ContractViolation("risk outside the declared range [0, M]" + at);
    if (!std::isfinite(r.delta) || r.delta < 0.0)
      throw ContractViolation("invalid oracle slack" + at);
    if (r.theta_id.empty() || r.theta_id.find(',') != std::string::npos)
      throw ContractViolation("oracle parameter label is empty or contains a comma" + at);
  };

  // records a training epoch and returns the attained value
  auto record = [&](const SimplexPoint& p, const OracleResponse& r, std::int64_t epoch) {
    double dot = 0.0;
    for (std::int64_t i = 0; i < I; ++i) {
      dot += p.w[i] * r.risk[i];
      tr.risk_sum[i] += r.risk[i];
    }
    tr.achieved.push_back(dot);
    auto it = theta_index.find(r.theta_id);
    std::int32_t idx;
    if (it == theta_index.end()) {
      idx = (std::int32_t)tr.theta_ids.size();
      theta_index.emplace(r.theta_id, idx);
      tr.theta_ids.push_back(r.theta_id);
      tr.theta_counts.push_back(0);
    } else {
      idx = it->second;
    }
    tr.theta_of_epoch.push_back(idx);
    ++tr.theta_counts[idx];
    if (cfg.store_iterates) tr.iterates.push_back(p.w);
    tr.delta_max = std::max(tr.delta_max, r.delta);
    tr.certified = tr.certified && r.certified;
    tr.epochs = epoch;
    return dot;
  };

  // valuation of a candidate average; not a training epoch
  auto certify = [&](const SimplexPoint& pb, std::int64_t at_epoch) {
    double lo = std::numeric_limits<double>::infinity();
    for (double rs : tr.risk_sum) lo = std::min(lo, rs / (double)at_epoch);
    OracleResponse r = call(pb, rng);
    check(r, at_epoch);
    double dot = 0.0;
    for (std::int64_t i = 0; i < I; ++i) dot += pb.w[i] * r.risk[i];
    tr.delta_max = std::max(tr.delta_max, r.delta);
    tr.certified = tr.certified && r.certified;
    GapRecord g{at_epoch, lo, dot + r.delta};
    tr.gap_checks.push_back(g);
    return g;
  };

  if (I == 1) {
    // nothing to learn; one valuation call prices the single rule
    SimplexPoint p;
    p.w = {1.0};
    OracleResponse r = call(p, rng);
    check(r, 1);
    record(p, r, 1);
    out.p_epsilon = p;
    out.epochs_run = 1;
    out.v_bar_epsilon = value_estimate(tr);
    GapRecord g{1, tr.risk_sum[0], tr.achieved[0] + r.delta};
    tr.gap_checks.push_back(g);
    out.lower_bound = g.lower;
    out.upper_bound = g.upper;
  } else {
    std::int64_t T = sch.epochs;
    if (cfg.max_epochs) T = std::min(T, *cfg.max_epochs);

    LogWeights lw;
    lw.log_w.assign(I, 0.0);
    std::vector<double> psum(I, 0.0);
    std::int64_t run = 0;
    bool stopped = false;

    for (std::int64_t t = 1; t <= T; ++t) {
      SimplexPoint p = normalize(lw);
      OracleResponse r = call(p, rng);
      check(r, t);
      record(p, r, t);
      for (std::int64_t i = 0; i < I; ++i) psum[i] += p.w[i];
      run = t;
      if (cfg.early_stop && t % cfg.gap_check_period == 0 && t < T) {
        SimplexPoint pb;
        pb.w.resize(I);
        for (std::int64_t i = 0; i < I; ++i) pb.w[i] = psum[i] / (double)t;
        GapRecord g = certify(pb, t);
        if (g.upper - g.lower <= cfg.epsilon) {
          stopped = true;
          out.p_epsilon = pb;
          out.lower_bound = g.lower;
          out.upper_bound = g.upper;
          break;
        }
      }
      update_weights(lw, r.risk, sch.eta);
    }

    out.epochs_run = run;
    if (!stopped) {
      SimplexPoint pb;
      pb.w.resize(I);
      for (std::int64_t i = 0; i < I; ++i) pb.w[i] = psum[i] / (double)run;
      out.p_epsilon = pb;
      GapRecord g = certify(pb, run);
      out.lower_bound = g.lower;
      out.upper_bound = g.upper;
    }
    out.v_bar_epsilon = value_estimate(tr);
  }

  out.lfd_support.reserve(tr.theta_ids.size());
  for (std::size_t k = 0; k < tr.theta_ids.size(); ++k)
    out.lfd_support.emplace_back(tr.theta_ids[k], tr.theta_counts[k]);
  out.delta_max = tr.delta_max;
  out.certified = tr.certified && !stochastic;
  return out;
}

}  // namespace

SolverResult hedge_solve(const RiskOracle& oracle, const SolverConfig& cfg) {
  return run_hedge([&oracle](const SimplexPoint& p, std::mt19937_64&) { return oracle(p); },
                   cfg, false);
}

SolverResult hedge_solve_stochastic(const StochasticOracle& oracle, const SolverConfig& cfg) {
  return run_hedge(
      [&oracle](const SimplexPoint& p, std::mt19937_64& rng) { return oracle(p, rng); }, cfg,
      true);
}

}  // namespace hedgemax
