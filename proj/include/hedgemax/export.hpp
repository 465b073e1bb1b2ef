#pragma once

#include "hedgemax/core.hpp"
#include "json.hpp"

#include <string>
#include <vector>

namespace hedgemax::io {

constexpr int kSchemaVersion = 1;

// flat, serializable view of a finished run (the trace stays in its own csv)
struct ExportedResult {
  int schema_version = kSchemaVersion;
  std::string problem;
  double epsilon = 0.0;
  double risk_bound = 0.0;
  double eta = 0.0;
  std::int64_t num_rules = 0;
  std::int64_t scheduled_epochs = 0;
  std::int64_t epochs_run = 0;
  bool early_stopped = false;
  bool stochastic = false;
  bool certified = true;
  double delta_max = 0.0;
  std::uint64_t seed = 0;
  double v_bar_epsilon = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::vector<std::string> rule_labels;
  std::vector<double> p_epsilon;
  std::vector<std::pair<std::string, double>> lfd;
};

ExportedResult summarize(const SolverResult& res, const SolverConfig& cfg,
                         std::string problem, std::vector<std::string> rule_labels);

nlohmann::json to_json(const ExportedResult& er);
ExportedResult from_json(const nlohmann::json& j);

void write_trace_csv(const Trace& trace, const std::string& path);
void write_gap_csv(const Trace& trace, const std::string& path);

}  // namespace hedgemax::io
