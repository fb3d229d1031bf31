#include "lorentz/constants.hpp"

#include <cmath>
#include <string>

#include "lorentz/error.hpp"

namespace lorentz {

namespace {
double unit_ball_volume(int n) { return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }
}  // namespace

Constants constants(int dim) {
  if (dim != 2 && dim != 3) throw DomainError("dimension must be 2 or 3, got " + std::to_string(dim));
  Constants c{};
  c.dim = dim;
  c.ball_volume = unit_ball_volume(dim - 1);
  c.xi_bar = 1.0 / c.ball_volume;
  c.zeta = std::riemann_zeta(static_cast<double>(dim));
  c.tail_A = std::pow(2.0, 2 - dim) / (dim * (dim + 1) * c.zeta);
  c.sigma2 = c.tail_A / (2.0 * dim * c.xi_bar);
  return c;
}

void assert_constants() {
  const Constants c = constants(2);
  const double pi2 = M_PI * M_PI;
  auto check = [](const char* name, double got, double want) {
    if (std::abs(got - want) > 1e-13 * std::abs(want))
      throw NumericalError(std::string("constant ") + name + " mismatch: " + std::to_string(got));
  };
  check("xi_bar", c.xi_bar, 0.5);
  check("A_2", c.tail_A, 1.0 / pi2);
  check("Sigma_2^2", c.sigma2, 1.0 / (2.0 * pi2));
}

}  // namespace lorentz
