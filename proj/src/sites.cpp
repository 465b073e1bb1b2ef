#include "hedgemax/sites.hpp"

#include "hedgemax/errors.hpp"
#include "hedgemax/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace hedgemax::sites {

void SiteData::finalize() {
  const int N = (int)ids.size();
  if (N == 0) throw ConfigError("no sites");
  if ((int)x.size() != N) throw ConfigError("covariate rows do not match the id list");
  const std::size_t D = x[0].size();
  if (D == 0) throw ConfigError("sites need at least one covariate");
  for (const auto& row : x) {
    if (row.size() != D) throw ConfigError("ragged covariate rows");
    for (double v : row)
      if (!std::isfinite(v)) throw ConfigError("non-finite covariate");
  }
  if (experimental.empty()) throw ConfigError("no experimental sites");
  if (policy.empty()) throw ConfigError("no policy sites");
  std::vector<int> seen(N, 0);
  for (int s : experimental) {
    if (s < 0 || s >= N) throw ConfigError("experimental index out of range");
    ++seen[s];
  }
  for (int s : policy) {
    if (s < 0 || s >= N) throw ConfigError("policy index out of range");
    ++seen[s];
  }
  for (int cnt : seen)
    if (cnt != 1) throw ConfigError("each site must be exactly one of experimental or policy");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(C >= 0.0) || !std::isfinite(C)) throw ConfigError("smoothness constant must be nonnegative");
  dist.assign(N, std::vector<double>(N, 0.0));
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < D; ++k) {
        double t = x[i][k] - x[j][k];
        s += t * t;
      }
      dist[i][j] = dist[j][i] = std::sqrt(s);
    }
}

double calibrate_C(double effect_gap, double distance) {
  if (!(distance > 0.0)) throw ConfigError("calibration distance must be positive");
  if (!std::isfinite(effect_gap)) throw ConfigError("calibration gap must be finite");
  return std::abs(effect_gap) / distance;
}

double site_regret(int exp_pos, const std::vector<double>& tau, const SiteData& data) {
  if (exp_pos < 0 || exp_pos >= (int)data.experimental.size())
    throw ConfigError("experimental position out of range");
  if ((int)tau.size() != data.n()) throw ConfigError("effect vector does not cover every site");
  const double accept = num::norm_cdf(tau[data.experimental[exp_pos]] / data.sigma);
  double sum = 0.0;
  for (int sp : data.policy) sum += tau[sp] * ((tau[sp] >= 0.0 ? 1.0 : 0.0) - accept);
  return sum / (double)data.policy.size();
}

Envelopes mcshane_bounds(const std::vector<int>& anchor_idx,
                         const std::vector<double>& anchor_val, const SiteData& data,
                         double box) {
  if (anchor_idx.empty() || anchor_idx.size() != anchor_val.size())
    throw ConfigError("anchor lists are empty or mismatched");
  if (!(box > 0.0)) throw ConfigError("effect box must be positive");
  const int N = data.n();
  for (std::size_t a = 0; a < anchor_idx.size(); ++a) {
    const int i = anchor_idx[a];
    if (i < 0 || i >= N) throw ConfigError("anchor index out of range");
    if (std::abs(anchor_val[a]) > box)
      throw ConfigError("anchored value sticks out of the effect box");
    for (std::size_t b = a + 1; b < anchor_idx.size(); ++b)
      if (std::abs(anchor_val[a] - anchor_val[b]) >
          data.C * data.dist[i][anchor_idx[b]] + 1e-9)
        throw ConfigError("anchored values violate the smoothness constant");
  }
  Envelopes env;
  env.lo.assign(N, -box);
  env.up.assign(N, box);
  for (int j = 0; j < N; ++j)
    for (std::size_t a = 0; a < anchor_idx.size(); ++a) {
      const double reach = data.C * data.dist[anchor_idx[a]][j];
      env.up[j] = std::min(env.up[j], anchor_val[a] + reach);
      env.lo[j] = std::max(env.lo[j], anchor_val[a] - reach);
    }
  return env;
}

double effect_bound(const SiteData& data, double anchor_tau, int anchor_site) {
  if (anchor_site < 0 || anchor_site >= data.n())
    throw ConfigError("anchor site out of range");
  if (!std::isfinite(anchor_tau)) throw ConfigError("anchored effect must be finite");
  double far = 0.0;
  for (int s = 0; s < data.n(); ++s) far = std::max(far, data.dist[anchor_site][s]);
  return std::abs(anchor_tau) + data.C * far;
}

LipschitzOracle::LipschitzOracle(SiteData data, double box_bound, OracleBudget budget)
    : data_(std::move(data)), box_(box_bound), budget_(budget) {
  if (!(box_ > 0.0) || !std::isfinite(box_)) throw ConfigError("effect box must be positive");
  if (budget_.lattice_per_dim < 2 || budget_.polish_starts < 1 ||
      budget_.polish_rounds < 0 || budget_.max_sweeps < 1)
    throw ConfigError("degenerate search budget");
  if (data_.dist.size() != (std::size_t)data_.n()) data_.finalize();
}

InnerSolution LipschitzOracle::inner_best(const std::vector<double>& tau_exp,
                                          const SimplexPoint& p) const {
  const auto& ex = data_.experimental;
  const auto& pol = data_.policy;
  if (tau_exp.size() != ex.size())
    throw ContractViolation("trial values do not match the experimental sites");
  if (p.w.size() != ex.size())
    throw ContractViolation("mixture size does not match the experimental sites");
  const Envelopes env = mcshane_bounds(ex, tau_exp, data_, box_);
  double accept = 0.0;
  for (std::size_t s = 0; s < ex.size(); ++s)
    accept += p.w[s] * num::norm_cdf(tau_exp[s] / data_.sigma);
  // the per-site payoff is V-shaped with its minimum at zero, so every
  // one-dimensional slice attains its maximum at an interval endpoint
  auto r = [&](double v) { return v * ((v >= 0.0 ? 1.0 : 0.0) - accept); };

  const int P = (int)pol.size();
  const double tol = 1e-13 * std::max(1.0, box_);

  auto slice = [&](const std::vector<double>& v, int j, double& lo, double& hi) {
    lo = env.lo[pol[j]];
    hi = env.up[pol[j]];
    for (int o = 0; o < P; ++o) {
      if (o == j) continue;
      const double reach = data_.C * data_.dist[pol[j]][pol[o]];
      lo = std::max(lo, v[o] - reach);
      hi = std::min(hi, v[o] + reach);
    }
    if (lo > hi) lo = hi = 0.5 * (lo + hi);  // fp dust on a pinched slice
  };

  // walk the coordinates once, clamping each into the interval its
  // predecessors allow; triangle inequality keeps those intervals nonempty
  auto repair = [&](std::vector<double>& v) {
    for (int j = 0; j < P; ++j) {
      double lo = env.lo[pol[j]], hi = env.up[pol[j]];
      for (int o = 0; o < j; ++o) {
        const double reach = data_.C * data_.dist[pol[j]][pol[o]];
        lo = std::max(lo, v[o] - reach);
        hi = std::min(hi, v[o] + reach);
      }
      if (lo > hi) lo = hi = 0.5 * (lo + hi);
      v[j] = std::clamp(v[j], lo, hi);
    }
  };

  auto ascend = [&](std::vector<double>& v) {
    for (int sweep = 0; sweep < budget_.max_sweeps; ++sweep) {
      bool moved = false;
      for (int j = 0; j < P; ++j) {
        double lo, hi;
        slice(v, j, lo, hi);
        const double cand = r(hi) >= r(lo) ? hi : lo;
        if (r(cand) > r(v[j]) + 1e-15 && std::abs(cand - v[j]) > tol) {
          v[j] = cand;
          moved = true;
        }
      }
      if (!moved) break;
    }
    double sum = 0.0;
    for (int j = 0; j < P; ++j) sum += r(v[j]);
    return sum / (double)P;
  };

  std::vector<std::vector<double>> starts;
  if (P <= 10) {
    for (unsigned mask = 0; mask < (1u << P); ++mask) {
      std::vector<double> v(P);
      for (int j = 0; j < P; ++j) v[j] = (mask >> j & 1u) ? env.up[pol[j]] : env.lo[pol[j]];
      starts.push_back(std::move(v));
    }
  } else {
    std::vector<double> up(P), lo(P), greedy(P);
    for (int j = 0; j < P; ++j) {
      up[j] = env.up[pol[j]];
      lo[j] = env.lo[pol[j]];
      greedy[j] = r(up[j]) >= r(lo[j]) ? up[j] : lo[j];
    }
    starts = {std::move(up), std::move(lo), std::move(greedy)};
  }

  InnerSolution best;
  best.value = -std::numeric_limits<double>::infinity();
  for (auto& v : starts) {
    repair(v);
    const double val = ascend(v);
    if (val > best.value) {
      best.value = val;
      best.tau_policy = v;
    }
  }
  return best;
}

double LipschitzOracle::objective(const std::vector<double>& tau_exp, const SimplexPoint& p,
                                  InnerSolution* sol) const {
  InnerSolution s = inner_best(tau_exp, p);
  const double v = s.value;
  if (sol) *sol = std::move(s);
  return v;
}

OracleResponse LipschitzOracle::operator()(const SimplexPoint& p) const {
  const auto& ex = data_.experimental;
  const int E = (int)ex.size();
  if ((int)p.w.size() != E)
    throw ContractViolation("mixture size does not match the experimental sites");

  const int L = budget_.lattice_per_dim;
  const double combos_d = std::pow((double)L, E);
  if (combos_d > 200000.0) throw ConfigError("trial-site lattice too large for this budget");
  const long combos = (long)std::llround(combos_d);

  auto exp_repair = [&](std::vector<double>& te) {
    for (int a = 0; a < E; ++a) {
      double lo = -box_, hi = box_;
      for (int b = 0; b < a; ++b) {
        const double reach = data_.C * data_.dist[ex[a]][ex[b]];
        lo = std::max(lo, te[b] - reach);
        hi = std::min(hi, te[b] + reach);
      }
      if (lo > hi) lo = hi = 0.5 * (lo + hi);
      te[a] = std::clamp(te[a], lo, hi);
    }
  };

  std::vector<std::pair<double, std::vector<double>>> pool;
  pool.reserve(combos);
  std::vector<int> digit(E, 0);
  for (long c = 0; c < combos; ++c) {
    std::vector<double> te(E);
    for (int a = 0; a < E; ++a) te[a] = -box_ + 2.0 * box_ * digit[a] / (L - 1);
    for (int a = E - 1; a >= 0; --a) {
      if (++digit[a] < L) break;
      digit[a] = 0;
    }
    exp_repair(te);
    pool.emplace_back(objective(te, p, nullptr), std::move(te));
  }
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  if ((int)pool.size() > budget_.polish_starts) pool.resize(budget_.polish_starts);

  const double gold_tol = 1e-4 * (1.0 + box_);
  for (auto& entry : pool) {
    double& val = entry.first;
    std::vector<double>& te = entry.second;
    for (int round = 0; round < budget_.polish_rounds; ++round)
      for (int a = 0; a < E; ++a) {
        double lo = -box_, hi = box_;
        for (int b = 0; b < E; ++b) {
          if (b == a) continue;
          const double reach = data_.C * data_.dist[ex[a]][ex[b]];
          lo = std::max(lo, te[b] - reach);
          hi = std::min(hi, te[b] + reach);
        }
        if (hi - lo <= gold_tol) continue;
        std::vector<double> cand = te;
        const double t = num::golden_max(
            [&](double tv) {
              cand[a] = tv;
              return objective(cand, p, nullptr);
            },
            lo, hi, gold_tol);
        cand[a] = t;
        const double v = objective(cand, p, nullptr);
        if (v > val) {
          val = v;
          te = cand;
        }
      }
  }

  const auto bestit =
      std::max_element(pool.begin(), pool.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::vector<double>& te = bestit->second;
  InnerSolution sol;
  objective(te, p, &sol);

  std::vector<double> tau(data_.n(), 0.0);
  for (int a = 0; a < E; ++a) tau[ex[a]] = te[a];
  for (std::size_t j = 0; j < data_.policy.size(); ++j)
    tau[data_.policy[j]] = sol.tau_policy[j];

  OracleResponse out;
  out.risk.resize(E);
  double dot = 0.0;
  for (int s = 0; s < E; ++s) {
    out.risk[s] = site_regret(s, tau, data_);
    dot += p.w[s] * out.risk[s];
  }
  out.achieved = dot;
  std::string id = "tau=";
  char buf[32];
  for (int i = 0; i < data_.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.4f", tau[i]);
    if (i) id += '|';
    id += buf;
  }
  out.theta_id = std::move(id);
  out.delta = 0.0;
  out.certified = false;
  return out;
}

RiskOracle lipschitz_oracle(const SiteData& data, double box_bound, OracleBudget budget) {
  auto o = std::make_shared<LipschitzOracle>(data, box_bound, budget);
  return [o](const SimplexPoint& p) { return (*o)(p); };
}

double epsilon_for_runtime(double M, std::int64_t num_rules, double budget_seconds,
                           double per_call_seconds) {
  if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("risk bound M must be positive");
  if (num_rules < 2) throw ConfigError("need at least two rules to trade accuracy for time");
  if (!(budget_seconds > 0.0)) throw ConfigError("time budget must be positive");
  if (!(per_call_seconds > 0.0)) throw ConfigError("per-call cost must be positive");
  const double T = std::floor(budget_seconds / per_call_seconds);
  if (T < 1.0) throw ConfigError("budget cannot afford a single oracle call");
  const double eps = M * std::sqrt(2.0 * std::log((double)num_rules) / T);
  if (eps > M)
    throw ConfigError("budget cannot certify anything below the risk bound itself");
  return eps;
}

SiteData synthetic_sites(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u01 = [&]() { return (double)(rng() >> 11) * 0x1.0p-53; };
  const int D = 13;

  SiteData d;
  d.sigma = 4.5;
  std::vector<double> e1(D);
  for (double& v : e1) v = 10.0 * (u01() - 0.5);
  std::vector<double> e2 = e1;
  e2[0] += 7.7736;  // the observed calibration contrast sits along one axis
  std::vector<double> e3 = e1;
  e3[2] += 4.6;
  e3[3] -= 5.2;
  d.ids = {"E1", "E2", "E3"};
  d.x = {e1, e2, e3};
  d.experimental = {0, 1, 2};

  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  auto nearest = [&](const std::vector<double>& pt) {
    int arg = 0;
    double best = dist2(pt, d.x[0]);
    for (int e = 1; e < 3; ++e) {
      const double v = dist2(pt, d.x[e]);
      if (v < best) {
        best = v;
        arg = e;
      }
    }
    return arg;
  };
  auto add_near = [&](int center, double spread, const std::string& id) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::vector<double> pt = d.x[center];
      for (double& v : pt) v += spread * (2.0 * u01() - 1.0);
      if (nearest(pt) == center) {
        d.ids.push_back(id);
        d.x.push_back(std::move(pt));
        return;
      }
    }
    throw NumericalFailure("synthetic panel sampling stalled");
  };

  char buf[8];
  int label = 1;
  for (int i = 0; i < 30; ++i, ++label) {
    std::snprintf(buf, sizeof(buf), "S%02d", label);
    add_near(2, 0.8, buf);
  }
  for (int i = 0; i < 4; ++i, ++label) {
    std::snprintf(buf, sizeof(buf), "S%02d", label);
    add_near(0, 1.2, buf);
  }
  for (int i = 0; i < 4; ++i, ++label) {
    std::snprintf(buf, sizeof(buf), "S%02d", label);
    add_near(1, 1.2, buf);
  }
  for (int s = 3; s < (int)d.ids.size(); ++s) d.policy.push_back(s);
  d.C = calibrate_C(9.2, std::sqrt(dist2(e1, e2)));
  d.finalize();
  return d;
}

namespace {
std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}
}  // namespace

SiteData load_sites(const std::string& path, double C, double default_sigma) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open site table " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty site table " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto hdr = split_csv(line);
  if (hdr.size() < 4 || hdr[0] != "id" || hdr[1] != "role" || hdr[2] != "sigma")
    throw ConfigError("site table header must start with id,role,sigma,x1,...");
  const int D = (int)hdr.size() - 3;
  for (int k = 0; k < D; ++k)
    if (hdr[3 + k] != "x" + std::to_string(k + 1))
      throw ConfigError("unexpected covariate column '" + hdr[3 + k] + "'");

  SiteData d;
  d.C = C;
  bool have_sigma = false;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    if ((int)tok.size() != 3 + D)
      throw ConfigError("row " + std::to_string(row) + " has the wrong number of fields");
    d.ids.push_back(tok[0]);
    const int idx = (int)d.ids.size() - 1;
    if (tok[1] == "experimental")
      d.experimental.push_back(idx);
    else if (tok[1] == "policy")
      d.policy.push_back(idx);
    else
      throw ConfigError("unknown role '" + tok[1] + "' in row " + std::to_string(row));
    double sg = default_sigma;
    try {
      if (!tok[2].empty()) sg = std::stod(tok[2]);
      std::vector<double> xs(D);
      for (int k = 0; k < D; ++k) xs[k] = std::stod(tok[3 + k]);
      d.x.push_back(std::move(xs));
    } catch (const std::invalid_argument&) {
      throw ConfigError("non-numeric field in row " + std::to_string(row));
    } catch (const std::out_of_range&) {
      throw ConfigError("out-of-range field in row " + std::to_string(row));
    }
    if (!have_sigma) {
      d.sigma = sg;
      have_sigma = true;
    } else if (std::abs(sg - d.sigma) > 1e-12) {
      throw ConfigError("sites disagree on the noise scale sigma");
    }
  }
  d.finalize();
  return d;
}

void write_sites_csv(const SiteData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  const int D = data.x.empty() ? 0 : (int)data.x[0].size();
  out << "id,role,sigma";
  for (int k = 1; k <= D; ++k) out << ",x" << k;
  out << "\n";
  std::vector<int> role(data.n(), 0);
  for (int s : data.policy) role[s] = 1;
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    out << data.ids[i] << ',' << (role[i] ? "policy" : "experimental") << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", data.sigma);
    out << buf;
    for (int k = 0; k < D; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x[i][k]);
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw ConfigError("failed writing " + path);
}

std::vector<int> order_policy_by_distance(const SiteData& data, int ref_site) {
  if (ref_site < 0 || ref_site >= data.n()) throw ConfigError("reference site out of range");
  if (data.dist.size() != (std::size_t)data.n())
    throw ConfigError("distances not built yet");
  std::vector<int> order = data.policy;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return data.dist[a][ref_site] < data.dist[b][ref_site];
  });
  return order;
}

SiteData scenario_subset(const SiteData& data, int n_policy, int ref_site) {
  if (n_policy < 1 || n_policy > (int)data.policy.size())
    throw ConfigError("scenario size must be between 1 and the number of policy sites");
  const auto order = order_policy_by_distance(data, ref_site);
  SiteData sub;
  sub.sigma = data.sigma;
  sub.C = data.C;
  for (int s : data.experimental) {
    sub.experimental.push_back((int)sub.ids.size());
    sub.ids.push_back(data.ids[s]);
    sub.x.push_back(data.x[s]);
  }
  for (int j = 0; j < n_policy; ++j) {
    const int s = order[j];
    sub.policy.push_back((int)sub.ids.size());
    sub.ids.push_back(data.ids[s]);
    sub.x.push_back(data.x[s]);
  }
  sub.finalize();
  return sub;
}

}  // namespace hedgemax::sites
