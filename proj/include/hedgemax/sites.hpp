#pragma once

#include "hedgemax/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hedgemax::sites {

// a panel of sites with covariates; experimental sites are candidate trial
// locations, policy sites are where the learned rule will be rolled out
struct SiteData {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> x;  // one covariate row per site
  std::vector<int> experimental;
  std::vector<int> policy;
  double sigma = 4.5;  // post-trial noise scale of the estimated effect
  double C = 1.0;      // smoothness constant of effects over covariate space
  std::vector<std::vector<double>> dist;  // filled by finalize()

  int n() const { return (int)ids.size(); }
  void finalize();  // builds pairwise distances from x and validates the split
};

SiteData load_sites(const std::string& path, double C, double default_sigma = 4.5);
void write_sites_csv(const SiteData& data, const std::string& path);

// smoothness constant implied by one observed cross-site contrast
double calibrate_C(double effect_gap, double distance);

// average policy-site regret of running the trial at experimental[exp_pos]
// when the true effects are tau (indexed by site)
double site_regret(int exp_pos, const std::vector<double>& tau, const SiteData& data);

struct Envelopes {
  std::vector<double> lo, up;  // per-site bounds implied by the anchors
};

// tightest C-Lipschitz bounds through the anchored values, clipped to the
// effect box [-box, box]; rejects anchors that contradict each other
Envelopes mcshane_bounds(const std::vector<int>& anchor_idx,
                         const std::vector<double>& anchor_val, const SiteData& data,
                         double box);

// radius of the effect box: |anchor_tau| plus the constant times the farthest
// site's distance from the anchor
double effect_bound(const SiteData& data, double anchor_tau, int anchor_site);

struct OracleBudget {
  int lattice_per_dim = 4;  // coarse grid per trial-site dimension
  int polish_starts = 5;    // best lattice points kept for local polish
  int polish_rounds = 3;    // coordinate passes of golden search per start
  int max_sweeps = 200;     // inner coordinate-ascent cap
};

struct InnerSolution {
  double value = 0.0;
  std::vector<double> tau_policy;
};

// adversary over C-Lipschitz effect profiles in the box. Trial-site values
// are searched by lattice plus local polish; given those, the policy-site
// profile is optimized by exact coordinate ascent (each one-dimensional slice
// is piecewise linear with its maximum at an interval endpoint). The search
// is a heuristic: responses carry delta 0 and certified = false.
class LipschitzOracle {
 public:
  LipschitzOracle(SiteData data, double box_bound, OracleBudget budget = {});
  OracleResponse operator()(const SimplexPoint& p) const;
  InnerSolution inner_best(const std::vector<double>& tau_exp, const SimplexPoint& p) const;
  double risk_bound() const { return box_; }

 private:
  double objective(const std::vector<double>& tau_exp, const SimplexPoint& p,
                   InnerSolution* sol) const;
  SiteData data_;
  double box_;
  OracleBudget budget_;
};

RiskOracle lipschitz_oracle(const SiteData& data, double box_bound, OracleBudget budget = {});

// accuracy affordable when each oracle call costs per_call_seconds and the
// whole run must fit in budget_seconds
double epsilon_for_runtime(double M, std::int64_t num_rules, double budget_seconds,
                           double per_call_seconds);

// 3 candidate trial sites and 38 policy sites on 13 covariates; the first two
// candidates sit at the calibration distance and thirty policy sites cluster
// around the third
SiteData synthetic_sites(std::uint64_t seed = 17);

// policy sites sorted by distance to a reference site
std::vector<int> order_policy_by_distance(const SiteData& data, int ref_site);

// panel restricted to the n nearest policy sites (all experimental sites kept)
SiteData scenario_subset(const SiteData& data, int n_policy, int ref_site);

}  // namespace hedgemax::sites
