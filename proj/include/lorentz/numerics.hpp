#pragma once

#include <functional>
#include <vector>

namespace lorentz {

struct QuadResult {
  double value = 0;
  double error = 0;
};

// Globally adaptive 61-point Gauss-Kronrod over [a, b], split at every
// breakpoint that falls strictly inside. Breakpoints need not be sorted or
// unique. When strict, throws NumericalError if the final error estimate is
// grossly above the requested tolerance.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     std::vector<double> breakpoints = {}, double rel_tol = 1e-11,
                     double abs_tol = 1e-13, bool strict = true);

// Same, integrating [a, infinity) by the substitution x = a + t/(1-t).
QuadResult integrate_to_inf(const std::function<double(double)>& f, double a,
                            double rel_tol = 1e-11, double abs_tol = 1e-13);

// x - log1p(x), accurate for small |x|.
double x_minus_log1p(double x);

}  // namespace lorentz
