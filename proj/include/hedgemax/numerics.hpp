#pragma once

#include <functional>
#include <vector>

namespace hedgemax::num {

// standard normal distribution
double norm_cdf(double x);
double norm_pdf(double x);

// golden-section search for the maximum of a unimodal function on [lo, hi];
// returns the abscissa
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol = 1e-10);

// bisection on a bracketing interval; throws NumericalFailure if f(lo) and
// f(hi) have the same sign. Stops once the interval is below xtol or |f| is
// below ftol (pass 0 to disable either).
double bisect_root(const std::function<double(double)>& f, double lo, double hi, double xtol,
                   double ftol);

struct Quadrature {
  std::vector<double> node;    // on (-1, 1)
  std::vector<double> weight;  // sums to 2
};

// Gauss-Legendre rule of the given order, cached after first use
const Quadrature& gauss_legendre(int n);

double integrate(const std::function<double(double)>& f, double a, double b,
                 const Quadrature& q);

}  // namespace hedgemax::num
