#include "hedgemax/treatment.hpp"

#include "hedgemax/errors.hpp"
#include "hedgemax/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace hedgemax::treatment {

namespace {

// sup_{x >= 0} x Phi(a - x); unimodal (Phi/phi is monotone), so a coarse
// scan plus golden sharpening is exact to roundoff
double sup_x_phi(double a) {
  const double hi = a + 10.0;
  if (hi <= 0.0) return 0.0;
  const int n = 4001;
  const double step = hi / (n - 1);
  double best = 0.0;
  int best_j = 0;
  for (int j = 0; j < n; ++j) {
    double x = j * step;
    double v = x * num::norm_cdf(a - x);
    if (v > best) {
      best = v;
      best_j = j;
    }
  }
  double lo = std::max(0.0, (best_j - 1) * step);
  double up = std::min(hi, (best_j + 1) * step);
  double xs = num::golden_max([&](double x) { return x * num::norm_cdf(a - x); }, lo, up, 1e-12);
  return std::max(best, xs * num::norm_cdf(a - xs));
}

double menu_abs_max(const std::vector<double>& c) {
  double m = 0.0;
  for (double v : c) {
    if (!std::isfinite(v)) throw ConfigError("thresholds must be finite");
    m = std::max(m, std::abs(v));
  }
  return m;
}

// worst-case bound for a concrete menu: the farthest threshold stretches the
// reach of the adversary beyond the k-ball
double menu_risk_bound(double sigma, double k, double max_abs_c) {
  return sigma * sup_x_phi((std::max(k, max_abs_c) + k) / sigma);
}

std::string theta_label(double mu, double ms) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mu=%.6f;ms=%.6f", mu, ms);
  return buf;
}

}  // namespace

double threshold_risk(double c, double mu, double mu_star, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  double accept = num::norm_cdf((mu - c) / sigma);
  return mu_star * ((mu_star >= 0.0 ? 1.0 : 0.0) - accept);
}

double mmr_risk_bound(double sigma, double k) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(k >= 0.0)) throw ConfigError("k must be nonnegative");
  return sigma * sup_x_phi(2.0 * k / sigma);
}

std::vector<double> uniform_menu(int n, double lo, double hi) {
  if (n <= 0) throw ConfigError("menu size must be positive");
  if (!(lo <= hi)) throw ConfigError("menu interval is empty");
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) c[i] = lo + (hi - lo) * i / (n - 1);
  return c;
}

MmrOracle::MmrOracle(MMRProblem prob, int grid_points) : prob_(std::move(prob)) {
  if (prob_.thresholds.empty()) throw ConfigError("empty threshold menu");
  if (!(prob_.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(prob_.k >= 0.0)) throw ConfigError("k must be nonnegative");
  if (grid_points < 8) throw ConfigError("grid too coarse");
  n_ = (int)prob_.thresholds.size();
  const double maxc = menu_abs_max(prob_.thresholds);
  hi_ = maxc + prob_.k + 10.0 * prob_.sigma;
  step_ = hi_ / (grid_points - 1);
  bound_ = menu_risk_bound(prob_.sigma, prob_.k, maxc);
  // both reduced branch objectives are Lipschitz in the effect size with
  // constant 1 + hi * phi(0) / sigma, so half a grid cell bounds the miss
  delta_ = (1.0 + hi_ * num::norm_pdf(0.0) / prob_.sigma) * step_ / 2.0;
  grid_v_.resize(grid_points);
  tab_pos_.resize((std::size_t)grid_points * n_);
  tab_neg_.resize((std::size_t)grid_points * n_);
  for (int j = 0; j < grid_points; ++j) {
    double v = j * step_;
    grid_v_[j] = v;
    for (int i = 0; i < n_; ++i) {
      double c = prob_.thresholds[i];
      tab_pos_[(std::size_t)j * n_ + i] = num::norm_cdf((c - v + prob_.k) / prob_.sigma);
      tab_neg_[(std::size_t)j * n_ + i] = num::norm_cdf((prob_.k - v - c) / prob_.sigma);
    }
  }
}

OracleResponse MmrOracle::operator()(const SimplexPoint& p) const {
  if ((int)p.w.size() != n_) throw ContractViolation("mixture size does not match the menu");
  const int G = (int)grid_v_.size();
  // positive-effect branch: effect v >= 0, estimator mean pushed to v - k
  // negative-effect branch: effect -v, mean pushed to k - v
  auto obj_plus = [&](double v) {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      s += p.w[i] * num::norm_cdf((prob_.thresholds[i] - v + prob_.k) / prob_.sigma);
    return v * s;
  };
  auto obj_minus = [&](double v) {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      s += p.w[i] * num::norm_cdf((prob_.k - v - prob_.thresholds[i]) / prob_.sigma);
    return v * s;
  };

  double best_p = 0.0, best_m = 0.0;
  int arg_p = 0, arg_m = 0;
  for (int j = 0; j < G; ++j) {
    double sp = 0.0, sm = 0.0;
    const double* rp = &tab_pos_[(std::size_t)j * n_];
    const double* rm = &tab_neg_[(std::size_t)j * n_];
    for (int i = 0; i < n_; ++i) {
      sp += p.w[i] * rp[i];
      sm += p.w[i] * rm[i];
    }
    double vp = grid_v_[j] * sp, vm = grid_v_[j] * sm;
    if (vp > best_p) {
      best_p = vp;
      arg_p = j;
    }
    if (vm > best_m) {
      best_m = vm;
      arg_m = j;
    }
  }

  auto sharpen = [&](auto&& f, int j, double coarse, double& arg) {
    double lo = grid_v_[std::max(0, j - 1)];
    double up = grid_v_[std::min(G - 1, j + 1)];
    double x = num::golden_max(f, lo, up, 1e-10);
    double fx = f(x);
    if (fx > coarse) {
      arg = x;
      return fx;
    }
    arg = grid_v_[j];
    return coarse;
  };
  double vstar_p, vstar_m;
  best_p = sharpen(obj_plus, arg_p, best_p, vstar_p);
  best_m = sharpen(obj_minus, arg_m, best_m, vstar_m);

  OracleResponse out;
  double mu, ms;
  if (best_p >= best_m - 1e-12) {
    ms = vstar_p;
    mu = vstar_p - prob_.k;
  } else {
    ms = -vstar_m;
    mu = prob_.k - vstar_m;
  }
  out.theta_id = theta_label(mu, ms);
  out.risk.resize(n_);
  double dot = 0.0;
  for (int i = 0; i < n_; ++i) {
    out.risk[i] = threshold_risk(prob_.thresholds[i], mu, ms, prob_.sigma);
    dot += p.w[i] * out.risk[i];
  }
  out.achieved = dot;
  out.delta = delta_;
  out.certified = true;
  return out;
}

RiskOracle mmr_oracle(const MMRProblem& prob, int grid_points) {
  auto o = std::make_shared<MmrOracle>(prob, grid_points);
  return [o](const SimplexPoint& p) { return (*o)(p); };
}

double rho_star(double sigma, double k) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(k > 0.0)) throw ConfigError("k must be positive");
  // the indifference curve leaves zero with negative slope only when
  // k > sigma / (2 phi(0)) = sigma sqrt(pi/2); otherwise zero is the only root
  if (k <= sigma * std::sqrt(std::acos(-1.0) / 2.0))
    throw ConfigError("no interior indifference point: k must exceed sigma*sqrt(pi/2)");
  auto h = [&](double r) { return r / (2.0 * k) - 0.5 + num::norm_cdf(-r / sigma); };
  // h(k) = Phi(-k/sigma) > 0; walk down until the curve dips negative
  double lo = k;
  for (int it = 0; it < 200; ++it) {
    lo *= 0.5;
    if (h(lo) < 0.0) break;
    if (lo < 1e-300) throw NumericalFailure("indifference bracket collapsed");
  }
  if (h(lo) >= 0.0) throw NumericalFailure("indifference bracket collapsed");
  return num::bisect_root(h, lo, k, 0.0, 1e-13);
}

double mqs_rule(double muhat, double rho) {
  if (rho < 0.0 || !std::isfinite(rho)) throw ConfigError("slope must be nonnegative");
  if (rho == 0.0) return muhat >= 0.0 ? 1.0 : 0.0;
  return std::clamp(muhat / (2.0 * rho) + 0.5, 0.0, 1.0);
}

double rb_mu_star(double mu, const std::vector<double>& p, const std::vector<double>& c,
                  double sigma, double k) {
  if (p.size() != c.size() || p.empty()) throw ConfigError("mixture/menu size mismatch");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(k >= 0.0)) throw ConfigError("k must be nonnegative");
  // the risk is linear on each side of zero, so only the endpoints matter
  double up = 0.0, dn = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    up += p[i] * threshold_risk(c[i], mu, mu + k, sigma);
    dn += p[i] * threshold_risk(c[i], mu, mu - k, sigma);
  }
  return up >= dn ? mu + k : mu - k;
}

RbOracle::RbOracle(RobustBayesProblem prob) : prob_(std::move(prob)) {
  if (prob_.thresholds.empty()) throw ConfigError("empty threshold menu");
  if (!(prob_.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(prob_.k >= 0.0)) throw ConfigError("k must be nonnegative");
  if (!std::isfinite(prob_.mu_bar)) throw ConfigError("prior location must be finite");
  bound_ = menu_risk_bound(prob_.sigma, prob_.k, menu_abs_max(prob_.thresholds));
  const std::size_t n = prob_.thresholds.size();
  phi_pos_.resize(n);
  phi_neg_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    phi_pos_[i] = num::norm_cdf((prob_.mu_bar - prob_.thresholds[i]) / prob_.sigma);
    phi_neg_[i] = num::norm_cdf((-prob_.mu_bar - prob_.thresholds[i]) / prob_.sigma);
  }
}

OracleResponse RbOracle::branch(const SimplexPoint& p, bool plus) const {
  const std::size_t n = prob_.thresholds.size();
  const double mu = plus ? prob_.mu_bar : -prob_.mu_bar;
  const std::vector<double>& phi = plus ? phi_pos_ : phi_neg_;
  double accept = 0.0;
  for (std::size_t i = 0; i < n; ++i) accept += p.w[i] * phi[i];
  auto val = [&](double ms) { return ms * ((ms >= 0.0 ? 1.0 : 0.0) - accept); };
  double ms = val(mu + prob_.k) >= val(mu - prob_.k) ? mu + prob_.k : mu - prob_.k;
  OracleResponse out;
  out.theta_id = (plus ? "p[" : "m[") + theta_label(mu, ms) + "]";
  out.risk.resize(n);
  const double ind = ms >= 0.0 ? 1.0 : 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.risk[i] = ms * (ind - phi[i]);
    dot += p.w[i] * out.risk[i];
  }
  out.achieved = dot;
  return out;
}

OracleResponse RbOracle::operator()(const SimplexPoint& p) const {
  if (p.w.size() != prob_.thresholds.size())
    throw ContractViolation("mixture size does not match the menu");
  OracleResponse bp = branch(p, true);
  OracleResponse bm = branch(p, false);
  OracleResponse out;
  out.theta_id = bp.theta_id + ";" + bm.theta_id;
  out.risk.resize(bp.risk.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < out.risk.size(); ++i) {
    out.risk[i] = 0.5 * (bp.risk[i] + bm.risk[i]);
    dot += p.w[i] * out.risk[i];
  }
  out.achieved = dot;
  return out;
}

OracleResponse RbOracle::sample(const SimplexPoint& p, std::mt19937_64& rng) const {
  if (p.w.size() != prob_.thresholds.size())
    throw ContractViolation("mixture size does not match the menu");
  return branch(p, (rng() & 1ull) == 0ull);
}

RiskOracle rb_oracle(const RobustBayesProblem& prob) {
  auto o = std::make_shared<RbOracle>(prob);
  return [o](const SimplexPoint& p) { return (*o)(p); };
}

StochasticOracle rb_gradient_sampler(const RobustBayesProblem& prob) {
  auto o = std::make_shared<RbOracle>(prob);
  return [o](const SimplexPoint& p, std::mt19937_64& rng) { return o->sample(p, rng); };
}

RhoPair rb_rho_star(double sigma, double k, double mu_bar) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(k > 0.0)) throw ConfigError("k must be positive");
  if (!(mu_bar > 0.0)) throw ConfigError("prior location must be positive");
  if (!(mu_bar < k)) throw ConfigError("prior location must sit inside the k-ball");
  const double m = mu_bar / sigma;
  const double target = (k - mu_bar) / (2.0 * k);
  const auto& q = num::gauss_legendre(129);
  auto G = [&](double rho) {
    return num::integrate(
        [&](double x) { return num::norm_cdf((2.0 * rho * x - rho - m * m) / m); }, 0.0, 1.0,
        q);
  };
  if (G(0.0) >= target)
    throw ConfigError("averaged indifference equation has no positive root here");
  double lo = 0.0, hi = std::max(1.0, m * m);
  int it = 0;
  while (G(hi) <= target) {
    lo = hi;
    hi *= 2.0;
    if (++it > 60) throw NumericalFailure("averaged indifference root ran away");
  }
  double rho = num::bisect_root([&](double r) { return G(r) - target; }, lo, hi, 0.0, 1e-12);
  return {rho, sigma * sigma * rho / mu_bar};
}

}  // namespace hedgemax::treatment
