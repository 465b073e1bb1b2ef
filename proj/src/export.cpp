#include "hedgemax/export.hpp"

#include "hedgemax/errors.hpp"

#include <cstdio>
#include <fstream>

namespace hedgemax::io {

namespace {
std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

ExportedResult summarize(const SolverResult& res, const SolverConfig& cfg,
                         std::string problem, std::vector<std::string> rule_labels) {
  const std::size_t I = res.p_epsilon.w.size();
  if (rule_labels.empty()) {
    rule_labels.reserve(I);
    for (std::size_t i = 0; i < I; ++i) rule_labels.push_back(std::to_string(i));
  }
  if (rule_labels.size() != I) throw ConfigError("rule label count does not match the menu");

  ExportedResult er;
  er.problem = std::move(problem);
  er.epsilon = cfg.epsilon;
  er.risk_bound = cfg.M;
  er.eta = res.eta;
  er.num_rules = cfg.num_rules;
  er.scheduled_epochs = res.scheduled_epochs;
  er.epochs_run = res.epochs_run;
  std::int64_t horizon = res.scheduled_epochs;
  if (cfg.max_epochs) horizon = std::min(horizon, *cfg.max_epochs);
  er.early_stopped = res.epochs_run < horizon;
  er.stochastic = res.stochastic;
  er.certified = res.certified;
  er.delta_max = res.delta_max;
  er.seed = cfg.seed;
  er.v_bar_epsilon = res.v_bar_epsilon;
  er.lower_bound = res.lower_bound;
  er.upper_bound = res.upper_bound;
  er.rule_labels = std::move(rule_labels);
  er.p_epsilon = res.p_epsilon.w;
  er.lfd.reserve(res.lfd_support.size());
  for (const auto& [id, count] : res.lfd_support)
    er.lfd.emplace_back(id, (double)count / (double)res.epochs_run);
  return er;
}

nlohmann::json to_json(const ExportedResult& er) {
  nlohmann::json j;
  j["schema_version"] = er.schema_version;
  j["problem"] = er.problem;
  j["epsilon"] = er.epsilon;
  j["risk_bound"] = er.risk_bound;
  j["eta"] = er.eta;
  j["num_rules"] = er.num_rules;
  j["scheduled_epochs"] = er.scheduled_epochs;
  j["epochs_run"] = er.epochs_run;
  j["early_stopped"] = er.early_stopped;
  j["stochastic"] = er.stochastic;
  j["certified"] = er.certified;
  j["delta_max"] = er.delta_max;
  j["seed"] = er.seed;
  j["v_bar_epsilon"] = er.v_bar_epsilon;
  j["lower_bound"] = er.lower_bound;
  j["upper_bound"] = er.upper_bound;
  j["rule_labels"] = er.rule_labels;
  j["p_epsilon"] = er.p_epsilon;
  nlohmann::json lfd = nlohmann::json::array();
  for (const auto& [id, wgt] : er.lfd) lfd.push_back({{"theta", id}, {"weight", wgt}});
  j["lfd"] = lfd;
  return j;
}

ExportedResult from_json(const nlohmann::json& j) {
  ExportedResult er;
  try {
    er.schema_version = j.at("schema_version").get<int>();
    if (er.schema_version != kSchemaVersion)
      throw ConfigError("unsupported result schema version " +
                        std::to_string(er.schema_version));
    er.problem = j.at("problem").get<std::string>();
    er.epsilon = j.at("epsilon").get<double>();
    er.risk_bound = j.at("risk_bound").get<double>();
    er.eta = j.at("eta").get<double>();
    er.num_rules = j.at("num_rules").get<std::int64_t>();
    er.scheduled_epochs = j.at("scheduled_epochs").get<std::int64_t>();
    er.epochs_run = j.at("epochs_run").get<std::int64_t>();
    er.early_stopped = j.at("early_stopped").get<bool>();
    er.stochastic = j.at("stochastic").get<bool>();
    er.certified = j.at("certified").get<bool>();
    er.delta_max = j.at("delta_max").get<double>();
    er.seed = j.at("seed").get<std::uint64_t>();
    er.v_bar_epsilon = j.at("v_bar_epsilon").get<double>();
    er.lower_bound = j.at("lower_bound").get<double>();
    er.upper_bound = j.at("upper_bound").get<double>();
    er.rule_labels = j.at("rule_labels").get<std::vector<std::string>>();
    er.p_epsilon = j.at("p_epsilon").get<std::vector<double>>();
    for (const auto& entry : j.at("lfd"))
      er.lfd.emplace_back(entry.at("theta").get<std::string>(),
                          entry.at("weight").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed result payload: ") + e.what());
  }
  return er;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "epoch,theta_id,achieved\n";
  for (std::int64_t t = 0; t < trace.epochs; ++t)
    out << (t + 1) << ',' << trace.theta_ids[trace.theta_of_epoch[t]] << ','
        << fmt_g(trace.achieved[t]) << '\n';
  if (!out) throw ConfigError("failed writing " + path);
}

void write_gap_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "epoch,lower,upper\n";
  for (const auto& g : trace.gap_checks)
    out << g.epoch << ',' << fmt_g(g.lower) << ',' << fmt_g(g.upper) << '\n';
  if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace hedgemax::io
