#include "hedgemax/game.hpp"

#include "hedgemax/errors.hpp"
#include "hedgemax/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hedgemax::game {

void MatrixGame::validate() const {
  if (risk.empty() || risk[0].empty()) throw ConfigError("empty game matrix");
  const std::size_t J = risk[0].size();
  for (const auto& row : risk)
    if (row.size() != J) throw ConfigError("ragged game matrix");
  if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("risk bound M must be positive");
  const double tol = 1e-9 * std::max(1.0, M);
  for (const auto& row : risk)
    for (double v : row)
      if (!std::isfinite(v) || v < -tol || v > M + tol)
        throw ContractViolation("matrix entry outside the declared range [0, M]");
}

LpSolution lp_minimax(const MatrixGame& g) {
  g.validate();
  const int I = g.rows(), J = g.cols();
  // shift by 1 so the value is strictly positive, then solve the standard
  // ratio form: maximize sum(y) over rows subject to (R+1)^T y <= 1.
  // The slack basis is feasible from the start, so no phase one is needed.
  const int W = I + J + 1;
  std::vector<std::vector<double>> tab(J + 1, std::vector<double>(W, 0.0));
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < I; ++i) tab[j][i] = g.risk[i][j] + 1.0;
    tab[j][I + j] = 1.0;
    tab[j][W - 1] = 1.0;
  }
  for (int i = 0; i < I; ++i) tab[J][i] = -1.0;
  std::vector<int> basis(J);
  for (int j = 0; j < J; ++j) basis[j] = I + j;

  for (int iter = 0; iter < 10000; ++iter) {
    // Bland: smallest improving column, smallest basis variable on ratio ties
    int enter = -1;
    for (int c = 0; c < W - 1; ++c)
      if (tab[J][c] < -1e-12) {
        enter = c;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < J; ++r) {
      if (tab[r][enter] <= 1e-12) continue;
      const double ratio = tab[r][W - 1] / tab[r][enter];
      if (ratio < best - 1e-12 || (ratio < best + 1e-12 &&
                                   (leave < 0 || basis[r] < basis[leave]))) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw NumericalFailure("game LP is unbounded");
    const double piv = tab[leave][enter];
    for (double& v : tab[leave]) v /= piv;
    for (int r = 0; r <= J; ++r) {
      if (r == leave) continue;
      const double f = tab[r][enter];
      if (f == 0.0) continue;
      for (int c = 0; c < W; ++c) tab[r][c] -= f * tab[leave][c];
    }
    basis[leave] = enter;
  }

  const double total = tab[J][W - 1];
  if (!(total > 1e-12)) throw NumericalFailure("degenerate game LP solution");
  LpSolution s;
  s.value = 1.0 / total - 1.0;

  std::vector<double> y(I, 0.0);
  for (int r = 0; r < J; ++r)
    if (basis[r] < I) y[basis[r]] = tab[r][W - 1];
  double ysum = 0.0;
  for (double v : y) ysum += std::max(v, 0.0);
  if (!(ysum > 0.0)) throw NumericalFailure("degenerate row mixture");
  s.p.w.resize(I);
  for (int i = 0; i < I; ++i) s.p.w[i] = std::max(y[i], 0.0) / ysum;

  // dual prices of the column constraints live in the slack reduced costs
  std::vector<double> x(J, 0.0);
  double xsum = 0.0;
  for (int j = 0; j < J; ++j) xsum += (x[j] = std::max(tab[J][I + j], 0.0));
  if (!(xsum > 0.0)) throw NumericalFailure("degenerate column mixture");
  s.q.w.resize(J);
  for (int j = 0; j < J; ++j) s.q.w[j] = x[j] / xsum;

  // re-certify the saddle against the original matrix before handing it out
  for (int j = 0; j < J; ++j) {
    double colpay = 0.0;
    for (int i = 0; i < I; ++i) colpay += s.p.w[i] * g.risk[i][j];
    if (colpay > s.value + 1e-9) throw NumericalFailure("row mixture fails to certify");
  }
  for (int i = 0; i < I; ++i) {
    double rowpay = 0.0;
    for (int j = 0; j < J; ++j) rowpay += s.q.w[j] * g.risk[i][j];
    if (rowpay < s.value - 1e-9) throw NumericalFailure("column mixture fails to certify");
  }
  return s;
}

OracleResponse matrix_oracle(const SimplexPoint& p, const MatrixGame& g) {
  const int I = g.rows(), J = g.cols();
  if ((int)p.w.size() != I) throw ContractViolation("mixture size does not match the rows");
  int arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < J; ++j) {
    double v = 0.0;
    for (int i = 0; i < I; ++i) v += p.w[i] * g.risk[i][j];
    if (v > best) {
      best = v;
      arg = j;
    }
  }
  OracleResponse out;
  out.theta_id = std::to_string(arg);
  out.risk.resize(I);
  for (int i = 0; i < I; ++i) out.risk[i] = g.risk[i][arg];
  out.achieved = best;
  out.delta = 0.0;
  out.certified = true;
  return out;
}

RiskOracle make_matrix_oracle(const MatrixGame& g) {
  g.validate();
  return [g](const SimplexPoint& p) { return matrix_oracle(p, g); };
}

int bayes_response(const SimplexPoint& q, const MatrixGame& g) {
  const int I = g.rows(), J = g.cols();
  if ((int)q.w.size() != J) throw ContractViolation("mixture size does not match the columns");
  int arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < I; ++i) {
    double v = 0.0;
    for (int j = 0; j < J; ++j) v += q.w[j] * g.risk[i][j];
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  return arg;
}

bool epsilon_maximin_check(const SimplexPoint& q, const MatrixGame& g, double v_ref,
                           double eps) {
  const int I = g.rows(), J = g.cols();
  if ((int)q.w.size() != J) throw ContractViolation("mixture size does not match the columns");
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < I; ++i) {
    double v = 0.0;
    for (int j = 0; j < J; ++j) v += q.w[j] * g.risk[i][j];
    worst = std::min(worst, v);
  }
  return worst >= v_ref - eps - 1e-12;
}

MaximinResult mirror_ascent_maximin(const MatrixGame& g, double epsilon) {
  g.validate();
  const int I = g.rows(), J = g.cols();
  // the column player runs the same engine on the reflected game
  MatrixGame flip;
  flip.M = g.M;
  flip.risk.assign(J, std::vector<double>(I, 0.0));
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < I; ++i) flip.risk[j][i] = g.M - g.risk[i][j];

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.M = g.M;
  cfg.num_rules = J;
  MaximinResult out;
  out.inner = hedge_solve(make_matrix_oracle(flip), cfg);
  out.q = out.inner.p_epsilon;
  out.p_hat.w.assign(I, 0.0);
  for (const auto& [id, weight] : extract_lfd(out.inner.trace))
    out.p_hat.w[std::stoi(id)] = weight;
  // the reflected bracket maps back with its ends swapped
  out.lower = g.M - out.inner.upper_bound;
  out.upper = g.M - out.inner.lower_bound;
  return out;
}

MatrixGame load_game_csv(const std::string& path, double M_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open game matrix " + path);
  MatrixGame g;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        vals.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("non-numeric entry in matrix row " + std::to_string(row));
      }
    }
    if (vals.empty()) throw ConfigError("empty matrix row " + std::to_string(row));
    g.risk.push_back(std::move(vals));
  }
  if (g.risk.empty()) throw ConfigError("matrix file has no rows");
  if (M_override >= 0.0) {
    g.M = M_override;
  } else {
    double top = 0.0;
    for (const auto& r : g.risk)
      for (double v : r) top = std::max(top, v);
    if (!(top > 0.0)) throw ConfigError("matrix has no positive entry to set the risk bound");
    g.M = top;
  }
  g.validate();
  return g;
}

}  // namespace hedgemax::game
