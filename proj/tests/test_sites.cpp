#include "doctest.h"
#include "hedgemax/errors.hpp"
#include "hedgemax/numerics.hpp"
#include "hedgemax/sites.hpp"
#include "support/reference_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace hedgemax;
using sites::SiteData;

namespace {

// small helper: sites on the plane with an explicit role split
SiteData plane(std::vector<std::vector<double>> pts, std::vector<int> exp_idx,
               std::vector<int> pol_idx, double C, double sigma = 4.5) {
  SiteData d;
  for (std::size_t i = 0; i < pts.size(); ++i) d.ids.push_back("s" + std::to_string(i));
  d.x = std::move(pts);
  d.experimental = std::move(exp_idx);
  d.policy = std::move(pol_idx);
  d.C = C;
  d.sigma = sigma;
  d.finalize();
  return d;
}

std::vector<double> parse_tau(const std::string& id) {
  std::vector<double> out;
  REQUIRE(id.rfind("tau=", 0) == 0);
  std::string rest = id.substr(4);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    std::size_t bar = rest.find('|', pos);
    if (bar == std::string::npos) bar = rest.size();
    out.push_back(std::stod(rest.substr(pos, bar - pos)));
    pos = bar + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("per-site regret of an experimentation choice, frozen points") {
  auto d = plane({{0.0, 0.0}, {1.0, 0.0}}, {0}, {1}, 1.0);
  // policy effect 1, trial site effect 0: half the mass treats wrongly
  CHECK(sites::site_regret(0, {0.0, 1.0}, d) == doctest::Approx(0.5).epsilon(1e-12));
  // trial site one noise unit up: 1 - Phi(1)
  CHECK(sites::site_regret(0, {4.5, 1.0}, d) ==
        doctest::Approx(0.15865525393145705).epsilon(1e-12));
  // harmful policy effect, trial pointing the wrong way
  CHECK(sites::site_regret(0, {-4.5, -2.0}, d) ==
        doctest::Approx(0.3173105078629141).epsilon(1e-12));
  // regret is never negative
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    double a = 10.0 * (ref::uniform01(rng) - 0.5), b = 10.0 * (ref::uniform01(rng) - 0.5);
    CHECK(sites::site_regret(0, {a, b}, d) >= 0.0);
  }
}

TEST_CASE("smoothness constant from a cross-site contrast") {
  CHECK(sites::calibrate_C(9.2, 7.7736) == doctest::Approx(1.18349).epsilon(2e-4));
  CHECK(sites::calibrate_C(-9.2, 7.7736) == doctest::Approx(1.18349).epsilon(2e-4));
  CHECK_THROWS_AS(sites::calibrate_C(9.2, 0.0), ConfigError);
  CHECK_THROWS_AS(sites::calibrate_C(9.2, -1.0), ConfigError);
}

TEST_CASE("extrapolation envelopes, frozen two-anchor example") {
  auto d = plane({{0.0, 0.0}, {1.0, 0.0}, {0.3, 0.4}}, {0, 1}, {2}, 1.0);
  auto env = sites::mcshane_bounds({0, 1}, {0.0, 0.5}, d, 10.0);
  // anchors are pinned
  CHECK(env.up[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(env.lo[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(env.up[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(env.lo[1] == doctest::Approx(0.5).epsilon(1e-12));
  // third site: distances 0.5 and sqrt(0.65)
  CHECK(env.up[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(env.lo[2] == doctest::Approx(0.5 - std::sqrt(0.65)).epsilon(1e-12));

  // anchors that contradict the smoothness constant are rejected
  CHECK_THROWS_AS(sites::mcshane_bounds({0, 1}, {0.0, 3.0}, d, 10.0), ConfigError);
  // an anchor outside the effect box is rejected too
  CHECK_THROWS_AS(sites::mcshane_bounds({0, 1}, {0.0, 0.5}, d, 0.4), ConfigError);
}

TEST_CASE("effect box from an anchored contrast") {
  auto d = plane({{0.0}, {3.0}}, {0}, {1}, 0.5);
  CHECK(sites::effect_bound(d, 2.0, 0) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(sites::effect_bound(d, -2.0, 0) == doctest::Approx(3.5).epsilon(1e-12));
  d.C = 0.0;
  CHECK(sites::effect_bound(d, 2.0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("inner adversary with a single policy site has a two-endpoint closed form") {
  auto d = plane({{0.0, 0.0}, {2.0, 0.0}}, {0}, {1}, 0.7);
  sites::LipschitzOracle oracle(d, 5.0);
  SimplexPoint p;
  p.w = {1.0};
  auto best = oracle.inner_best({1.2}, p);
  double A = num::norm_cdf(1.2 / 4.5);
  double u = 1.2 + 0.7 * 2.0, l = 1.2 - 0.7 * 2.0;
  auto r = [&](double v) { return v * ((v >= 0.0 ? 1.0 : 0.0) - A); };
  CHECK(best.value == doctest::Approx(std::max(r(u), r(l))).epsilon(1e-9));

  // negative trial value mirrors it
  auto best2 = oracle.inner_best({-3.0}, p);
  double A2 = num::norm_cdf(-3.0 / 4.5);
  double u2 = -3.0 + 1.4, l2 = -3.0 - 1.4;
  auto r2 = [&](double v) { return v * ((v >= 0.0 ? 1.0 : 0.0) - A2); };
  CHECK(best2.value == doctest::Approx(std::max(r2(u2), r2(l2))).epsilon(1e-9));
}

TEST_CASE("inner adversary with two coupled policy sites reaches the vertex optimum") {
  auto d = plane({{0.0, 0.0}, {1.0, 0.0}, {1.5, 0.0}}, {0}, {1, 2}, 1.0);
  sites::LipschitzOracle oracle(d, 4.0);
  SimplexPoint p;
  p.w = {1.0};
  auto best = oracle.inner_best({0.8}, p);

  double A = num::norm_cdf(0.8 / 4.5);
  double l1 = -0.2, u1 = 1.8, l2 = -0.7, u2 = 2.3;
  double grid = -1e300;
  const int n = 801;
  for (int a = 0; a < n; ++a) {
    double v1 = l1 + (u1 - l1) * a / (n - 1);
    for (int b = 0; b < n; ++b) {
      double v2 = l2 + (u2 - l2) * b / (n - 1);
      if (std::abs(v1 - v2) > 0.5 + 1e-12) continue;
      double val = 0.5 * (v1 * ((v1 >= 0 ? 1.0 : 0.0) - A) + v2 * ((v2 >= 0 ? 1.0 : 0.0) - A));
      grid = std::max(grid, val);
    }
  }
  CHECK(best.value >= grid - 1e-9);
  CHECK(best.value <= grid + 0.01);
  // feasibility of the reported values
  REQUIRE(best.tau_policy.size() == 2);
  CHECK(best.tau_policy[0] >= l1 - 1e-9);
  CHECK(best.tau_policy[0] <= u1 + 1e-9);
  CHECK(std::abs(best.tau_policy[0] - best.tau_policy[1]) <= 0.5 + 1e-9);
}

TEST_CASE("zero smoothness constant collapses the oracle to one dimension") {
  auto d = plane({{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}, {4.0, 0.0}}, {0, 1}, {2, 3}, 0.0);
  sites::LipschitzOracle oracle(d, 3.0);
  SimplexPoint p;
  p.w = {0.3, 0.7};
  auto r = oracle(p);
  // every effect is forced equal, so the sup is a 1-D scan
  double grid = 0.0;
  for (double t = -3.0; t <= 3.0 + 1e-12; t += 1e-4) {
    double v = t * ((t >= 0.0 ? 1.0 : 0.0) - ref::phi_cdf(t / 4.5));
    grid = std::max(grid, v);
  }
  CHECK(std::abs(r.achieved - grid) <= 1e-3);
  auto tau = parse_tau(r.theta_id);
  REQUIRE(tau.size() == 4);
  for (double v : tau) CHECK(v == doctest::Approx(tau[0]).epsilon(1e-9));
}

TEST_CASE("full oracle call dominates an independent dense sweep") {
  auto d = plane({{0.0, 0.0}, {2.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}}, {0, 1}, {2, 3}, 0.9);
  sites::OracleBudget budget;
  budget.lattice_per_dim = 9;
  budget.polish_starts = 8;
  budget.polish_rounds = 4;
  const double B = 2.5;
  sites::LipschitzOracle oracle(d, B, budget);
  SimplexPoint p;
  p.w = {0.35, 0.65};
  auto r = oracle(p);
  CHECK(!r.certified);
  CHECK(r.delta == 0.0);

  // independent brute force: 50 points per dimension on trial values and
  // policy values, feasibility-filtered
  double d01 = d.dist[0][1], d02 = d.dist[0][2], d12 = d.dist[1][2];
  double d03 = d.dist[0][3], d13 = d.dist[1][3], d23 = d.dist[2][3];
  double brute = 0.0;
  const int n = 50;
  auto lin = [&](int i) { return -B + 2.0 * B * i / (n - 1); };
  for (int a = 0; a < n; ++a) {
    double t0 = lin(a);
    for (int b = 0; b < n; ++b) {
      double t1 = lin(b);
      if (std::abs(t0 - t1) > 0.9 * d01 + 1e-12) continue;
      double A = 0.35 * ref::phi_cdf(t0 / 4.5) + 0.65 * ref::phi_cdf(t1 / 4.5);
      for (int e = 0; e < n; ++e) {
        double v2 = lin(e);
        if (std::abs(v2 - t0) > 0.9 * d02 + 1e-12) continue;
        if (std::abs(v2 - t1) > 0.9 * d12 + 1e-12) continue;
        for (int f = 0; f < n; ++f) {
          double v3 = lin(f);
          if (std::abs(v3 - t0) > 0.9 * d03 + 1e-12) continue;
          if (std::abs(v3 - t1) > 0.9 * d13 + 1e-12) continue;
          if (std::abs(v3 - v2) > 0.9 * d23 + 1e-12) continue;
          double val = 0.5 * (v2 * ((v2 >= 0 ? 1.0 : 0.0) - A) + v3 * ((v3 >= 0 ? 1.0 : 0.0) - A));
          brute = std::max(brute, val);
        }
      }
    }
  }
  CHECK(r.achieved >= brute - 0.01);
  CHECK(r.achieved <= brute + 0.25);

  // the reported adversary configuration is feasible and reproduces the call
  auto tau = parse_tau(r.theta_id);
  REQUIRE(tau.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(tau[i]) <= B + 1e-4);
    for (int j = i + 1; j < 4; ++j)
      CHECK(std::abs(tau[i] - tau[j]) <= 0.9 * d.dist[i][j] + 1e-4);
  }
  double dot = 0.0;
  for (int s = 0; s < 2; ++s) dot += p.w[s] * r.risk[s];
  CHECK(std::abs(r.achieved - dot) < 1e-9);
  for (double v : r.risk) {
    CHECK(v >= -1e-12);
    CHECK(v <= B + 1e-9);
  }
}

TEST_CASE("accuracy affordable inside a runtime budget, frozen grid") {
  const double M2[4] = {4.5739, 4.6194, 5.4978, 7.8915};
  const double per_call[4] = {0.35, 0.27, 0.37, 1.33};
  const double budgets[4] = {1800.0, 3600.0, 7200.0, 36000.0};
  const long expect_milli[4][4] = {
      {44, 31, 22, 10}, {39, 28, 20, 9}, {50, 35, 25, 11}, {113, 80, 57, 25}};
  for (int s = 0; s < 4; ++s)
    for (int b = 0; b < 4; ++b) {
      double eps = sites::epsilon_for_runtime(std::sqrt(M2[s]), 3, budgets[b], per_call[s]);
      CHECK(std::lround(eps * 1000.0) == expect_milli[s][b]);
    }
  // budget too small to make a single call
  CHECK_THROWS_AS(sites::epsilon_for_runtime(1.0, 3, 1.0, 2.0), ConfigError);
  // a single affordable call cannot certify anything below the risk bound
  CHECK_THROWS_AS(sites::epsilon_for_runtime(std::sqrt(7.8915), 3, 2.0, 1.33), ConfigError);
}

TEST_CASE("synthetic multi-site panel: shape, calibration pair, clustering") {
  auto d = sites::synthetic_sites(17);
  REQUIRE(d.ids.size() == 41);
  REQUIRE(d.x.size() == 41);
  for (const auto& row : d.x) CHECK(row.size() == 13);
  CHECK(d.experimental == std::vector<int>({0, 1, 2}));
  CHECK(d.policy.size() == 38);
  CHECK(d.sigma == doctest::Approx(4.5));
  // the two reference sites sit at the calibration distance
  CHECK(d.dist[0][1] == doctest::Approx(7.7736).epsilon(1e-9));
  CHECK(d.C == doctest::Approx(1.18349).epsilon(2e-4));
  // thirty policy sites cluster around the third candidate
  int near_third = 0;
  for (int s : d.policy) {
    int arg = 0;
    for (int e = 1; e < 3; ++e)
      if (d.dist[s][d.experimental[e]] < d.dist[s][d.experimental[arg]]) arg = e;
    if (arg == 2) ++near_third;
  }
  CHECK(near_third == 30);
  // ids unique, distances symmetric with a zero diagonal
  std::set<std::string> uniq(d.ids.begin(), d.ids.end());
  CHECK(uniq.size() == d.ids.size());
  for (int i = 0; i < 41; ++i) CHECK(d.dist[i][i] == 0.0);
  CHECK(d.dist[3][7] == doctest::Approx(d.dist[7][3]).epsilon(1e-15));

  // generator is deterministic in the seed
  auto d2 = sites::synthetic_sites(17);
  CHECK(d2.x == d.x);
  auto d3 = sites::synthetic_sites(18);
  CHECK(d3.x != d.x);
}

TEST_CASE("site table round-trips through csv") {
  auto d = sites::synthetic_sites(17);
  auto path = std::filesystem::temp_directory_path() / "hm_sites_roundtrip.csv";
  sites::write_sites_csv(d, path.string());
  auto back = sites::load_sites(path.string(), d.C);
  CHECK(back.ids == d.ids);
  CHECK(back.experimental == d.experimental);
  CHECK(back.policy == d.policy);
  CHECK(back.x == d.x);
  CHECK(back.sigma == doctest::Approx(d.sigma));
  CHECK(back.C == doctest::Approx(d.C));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(sites::load_sites("/nonexistent/nope.csv", 1.0), ConfigError);
  auto bad = std::filesystem::temp_directory_path() / "hm_sites_bad.csv";
  {
    FILE* f = std::fopen(bad.string().c_str(), "w");
    std::fputs("id,role\nX,policy\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(sites::load_sites(bad.string(), 1.0), ConfigError);
  std::filesystem::remove(bad);
}

TEST_CASE("policy sites ordered by distance and scenario subsets") {
  auto d = sites::synthetic_sites(17);
  auto order = sites::order_policy_by_distance(d, 2);
  REQUIRE(order.size() == 38);
  for (std::size_t i = 0; i + 1 < order.size(); ++i)
    CHECK(d.dist[order[i]][2] <= d.dist[order[i + 1]][2] + 1e-15);

  for (int n : {1, 5, 15, 38}) {
    auto sub = sites::scenario_subset(d, n, 2);
    CHECK(sub.experimental.size() == 3);
    CHECK((int)sub.policy.size() == n);
    CHECK(sub.ids.size() == 3u + n);
    // nearest policy site comes first
    CHECK(sub.ids[3] == d.ids[order[0]]);
    // distances carried over consistently
    CHECK(sub.dist[0][1] == doctest::Approx(d.dist[0][1]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sites::scenario_subset(d, 0, 2), ConfigError);
  CHECK_THROWS_AS(sites::scenario_subset(d, 39, 2), ConfigError);
}
