#pragma once

#include "hedgemax/core.hpp"

#include <string>
#include <vector>

namespace hedgemax::game {

// finite zero-sum game in risk form: rows mix to minimize, columns to maximize
struct MatrixGame {
  std::vector<std::vector<double>> risk;
  double M = 1.0;
  int rows() const { return (int)risk.size(); }
  int cols() const { return risk.empty() ? 0 : (int)risk[0].size(); }
  void validate() const;
};

struct LpSolution {
  SimplexPoint p;  // row mixture
  SimplexPoint q;  // column mixture
  double value = 0.0;
};

// exact minimax by linear programming (dense primal simplex); the returned
// saddle is re-certified against the matrix before it is returned
LpSolution lp_minimax(const MatrixGame& g);

// adversary for hedge runs: the worst pure column, lowest index on ties
OracleResponse matrix_oracle(const SimplexPoint& p, const MatrixGame& g);
RiskOracle make_matrix_oracle(const MatrixGame& g);

// best pure row against a column mixture (lowest index on ties)
int bayes_response(const SimplexPoint& q, const MatrixGame& g);

// does q guarantee at least v_ref - eps against every row?
bool epsilon_maximin_check(const SimplexPoint& q, const MatrixGame& g, double v_ref,
                           double eps);

struct MaximinResult {
  SimplexPoint q;      // averaged column mixture
  SimplexPoint p_hat;  // empirical row distribution the run produced
  double lower = 0.0;  // guaranteed payoff of q against the worst row
  double upper = 0.0;  // worst column payoff against p_hat
  SolverResult inner;
};

// maximin via the same engine run on the flipped game (columns become the
// hedged player, payoffs reflected through M)
MaximinResult mirror_ascent_maximin(const MatrixGame& g, double epsilon);

// comma-separated numeric rows; the bound defaults to the largest entry
MatrixGame load_game_csv(const std::string& path, double M_override = -1.0);

}  // namespace hedgemax::game
