#include "hedgemax/numerics.hpp"

#include "hedgemax/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace hedgemax::num {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double norm_pdf(double x) { return 0.3989422804014326779 * std::exp(-0.5 * x * x); }

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(hi >= lo)) throw ConfigError("golden_max: empty interval");
  const double g = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi, double xtol,
                   double ftol) {
  if (!(hi > lo)) throw ConfigError("bisect_root: empty interval");
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0.0) == (fhi > 0.0))
    throw NumericalFailure("bisect_root: interval does not bracket a sign change");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // interval exhausted at double precision
    double fm = f(mid);
    if (!std::isfinite(fm)) throw NumericalFailure("bisect_root: non-finite midpoint value");
    if (ftol > 0.0 && std::abs(fm) <= ftol) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (xtol > 0.0 && hi - lo <= xtol) break;
  }
  return 0.5 * (lo + hi);
}

const Quadrature& gauss_legendre(int n) {
  if (n < 2 || n > 2048) throw ConfigError("gauss_legendre: order out of range");
  static std::map<int, Quadrature> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> hold(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Quadrature q;
  q.node.resize(n);
  q.weight.resize(n);
  // Newton on the Legendre polynomial from the usual cosine initial guess
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.node[n - 1 - i] = x;
    q.weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return cache.emplace(n, std::move(q)).first->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const Quadrature& q) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < q.node.size(); ++i) s += q.weight[i] * f(mid + half * q.node[i]);
  return s * half;
}

}  // namespace hedgemax::num
