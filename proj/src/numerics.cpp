#include "lorentz/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>
#include <sstream>

#include "lorentz/error.hpp"

namespace lorentz {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
constexpr int kMaxSegments = 4000;

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// Single 61-point Kronrod panel. Boost 1.74 reports the leaf error estimate
// in the units of the reference interval [-1, 1], so it is rescaled here and
// the adaptive recursion is driven by a global queue instead.
Segment panel(const std::function<double(double)>& f, double a, double b) {
  double err = 0, l1 = 0;
  const double v = GK::integrate(f, a, b, 0, 0.0, &err, &l1);
  return {a, b, v, err * 0.5 * (b - a)};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     std::vector<double> breakpoints, double rel_tol, double abs_tol,
                     bool strict) {
  std::vector<double> pts{a};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (double p : breakpoints)
    if (p > a && p < b && p > pts.back()) pts.push_back(p);
  pts.push_back(b);

  std::priority_queue<Segment> queue;
  double value = 0, error = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Segment s = panel(f, pts[i], pts[i + 1]);
    value += s.value;
    error += s.error;
    queue.push(s);
  }
  int segments = static_cast<int>(queue.size());
  while (error > std::max(abs_tol, rel_tol * std::abs(value)) && segments < kMaxSegments) {
    const Segment worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    queue.pop();
    const Segment l = panel(f, worst.a, mid), r = panel(f, mid, worst.b);
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    queue.push(l);
    queue.push(r);
    ++segments;
  }
  // Sum afresh to shed the drift of the running updates.
  value = error = 0;
  for (; !queue.empty(); queue.pop()) {
    value += queue.top().value;
    error += queue.top().error;
  }
  if (strict && error > std::max(abs_tol, std::max(1e-7, 1e3 * rel_tol) * std::abs(value))) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] did not converge: value " << value
        << ", error estimate " << error;
    throw NumericalError(msg.str());
  }
  return {value, error};
}

QuadResult integrate_to_inf(const std::function<double(double)>& f, double a, double rel_tol,
                            double abs_tol) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return f(a + t / s) / (s * s);
  };
  return integrate(g, 0.0, 1.0, {}, rel_tol, abs_tol);
}

double x_minus_log1p(double x) {
  if (std::abs(x) < 1e-3) {
    // x^2/2 - x^3/3 + x^4/4 - ...
    double term = x * x, sum = 0;
    for (int n = 2; n < 12; ++n) {
      sum += (n % 2 == 0 ? 1.0 : -1.0) * term / n;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

}  // namespace lorentz
