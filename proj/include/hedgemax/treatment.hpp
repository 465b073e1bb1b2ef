#pragma once

#include "hedgemax/core.hpp"

#include <string>
#include <vector>

namespace hedgemax::treatment {

// regret of the step rule 1{muhat >= c} when the estimate is N(mu, sigma^2)
// and the true welfare effect is mu_star
double threshold_risk(double c, double mu, double mu_star, double sigma);

// uniform bound on that regret over |mu_star - mu| <= k:
// sigma * sup_{x >= 0} x Phi(2k/sigma - x)
double mmr_risk_bound(double sigma, double k);

// n equally spaced thresholds spanning [lo, hi] (midpoint when n = 1)
std::vector<double> uniform_menu(int n, double lo, double hi);

struct MMRProblem {
  std::vector<double> thresholds;
  double sigma = 1.0;
  double k = 1.0;
};

// worst-case parameter search for a mixture of threshold rules. The feasible
// set splits by the sign of the effect; each half reduces to a 1-D scan in
// the effect size, sampled on a fixed grid and sharpened by golden section.
// delta() is the provable slack of that scheme.
class MmrOracle {
 public:
  explicit MmrOracle(MMRProblem prob, int grid_points = 4096);
  OracleResponse operator()(const SimplexPoint& p) const;
  double delta() const { return delta_; }
  double risk_bound() const { return bound_; }

 private:
  MMRProblem prob_;
  int n_;
  double hi_, step_, delta_, bound_;
  // Phi tables for both sign branches, row-major [grid][rule]
  std::vector<double> tab_pos_, tab_neg_;
  std::vector<double> grid_v_;
};

RiskOracle mmr_oracle(const MMRProblem& prob, int grid_points = 4096);

// slope parameter at which the scaled rule is exactly indifferent:
// the positive root of rho/(2k) - 1/2 + Phi(-rho/sigma) = 0.
// Only defined when k >= sigma * sqrt(pi/2).
double rho_star(double sigma, double k);

// the interpolated rule clamp(muhat/(2 rho) + 1/2); rho = 0 degenerates to
// the step rule
double mqs_rule(double muhat, double rho);

struct RobustBayesProblem {
  std::vector<double> thresholds;
  double sigma = 1.0;
  double k = 1.0;
  double mu_bar = 0.5;  // the prior puts mass 1/2 on each of +/- mu_bar
};

// worst effect consistent with |mu_star - mu| <= k at a fixed estimate mean:
// the endpoint mu + k wins iff (mu + k)/(2k) >= sum_i p_i Phi((mu - c_i)/sigma)
double rb_mu_star(double mu, const std::vector<double>& p, const std::vector<double>& c,
                  double sigma, double k);

// posterior-averaged adversary for the symmetric two-point prior; both
// branches have closed forms, so the response is exact (delta 0)
class RbOracle {
 public:
  explicit RbOracle(RobustBayesProblem prob);
  OracleResponse operator()(const SimplexPoint& p) const;
  // single-branch realization: an unbiased estimate of the averaged risks
  OracleResponse sample(const SimplexPoint& p, std::mt19937_64& rng) const;
  double risk_bound() const { return bound_; }

 private:
  OracleResponse branch(const SimplexPoint& p, bool plus) const;
  RobustBayesProblem prob_;
  double bound_;
  std::vector<double> phi_pos_, phi_neg_;  // Phi((+/-mu_bar - c_i)/sigma)
};

RiskOracle rb_oracle(const RobustBayesProblem& prob);
StochasticOracle rb_gradient_sampler(const RobustBayesProblem& prob);

struct RhoPair {
  double rho = 0.0;           // root of the averaged indifference equation
  double rho_adjusted = 0.0;  // sigma^2 rho / mu_bar, the slope actually used
};

// root of int_0^1 Phi((2 rho x - rho - (mu_bar/sigma)^2) / (mu_bar/sigma)) dx
// = (k - mu_bar) / (2k) in rho > 0; rejects configurations where the
// left side already exceeds the target at rho = 0
RhoPair rb_rho_star(double sigma, double k, double mu_bar);

}  // namespace hedgemax::treatment
