#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hedgemax {

// a mixture over the decision menu
struct SimplexPoint {
  std::vector<double> w;
  // throws NumericalFailure if entries are non-finite, negative beyond tol,
  // or the total mass is off by more than tol
  void validate(double tol = 1e-12) const;
};

// multiplicative-weights state kept in log space so long runs cannot underflow
struct LogWeights {
  std::vector<double> log_w;
  std::int64_t epoch = 0;
};

// one adversary call: the (near-)worst-case parameter against the queried
// mixture, the per-rule risks at that parameter, and the attained value.
// theta_id must be a stable, comma-free label usable as a CSV field.
// delta is the declared search slack (0 for exact maximizers); certified says
// whether that slack is a proven bound rather than a heuristic's guess.
struct OracleResponse {
  std::string theta_id;
  std::vector<double> risk;
  double achieved = 0.0;
  double delta = 0.0;
  bool certified = true;
};

using RiskOracle = std::function<OracleResponse(const SimplexPoint&)>;
using StochasticOracle = std::function<OracleResponse(const SimplexPoint&, std::mt19937_64&)>;

struct SolverConfig {
  double epsilon = 0.1;  // target accuracy, must be in (0, M]
  double M = 1.0;        // uniform risk bound declared by the oracle
  std::int64_t num_rules = 1;
  std::optional<std::int64_t> max_epochs;  // hard cap on top of the schedule
  bool early_stop = true;
  std::int64_t gap_check_period = 50;
  std::uint64_t seed = 0;      // used by the stochastic loop only
  bool store_iterates = false; // keep every mixture visited (memory heavy)
  void validate() const;
};

struct GapRecord {
  std::int64_t epoch = 0;
  double lower = 0.0;
  double upper = 0.0;
};

// everything the run wrote down, enough to audit the certificate afterwards
struct Trace {
  std::int64_t epochs = 0;
  std::vector<double> achieved;        // oracle value per epoch
  std::vector<double> risk_sum;        // per-rule cumulative risks
  std::vector<std::int32_t> theta_of_epoch;  // index into theta_ids
  std::vector<std::string> theta_ids;  // distinct parameters in first-seen order
  std::vector<std::int64_t> theta_counts;
  std::vector<std::vector<double>> iterates;  // only if store_iterates
  std::vector<GapRecord> gap_checks;
  double delta_max = 0.0;
  bool certified = true;
};

struct SolverResult {
  SimplexPoint p_epsilon;  // averaged mixture
  std::vector<std::pair<std::string, std::int64_t>> lfd_support;
  double v_bar_epsilon = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::int64_t epochs_run = 0;
  std::int64_t scheduled_epochs = 0;
  double eta = 0.0;
  bool stochastic = false;
  bool certified = true;
  double delta_max = 0.0;
  Trace trace;
};

}  // namespace hedgemax
