#pragma once

namespace lorentz {

// Boltzmann-Grad constants in dimension d, computed from their defining
// formulas rather than hard-coded.
struct Constants {
  int dim;
  double ball_volume;   // v_{d-1}, volume of the unit ball in R^{d-1}
  double xi_bar;        // mean free path 1/v_{d-1}
  double zeta;          // zeta(d)
  double tail_A;        // A_d = 2^{2-d} / (d (d+1) zeta(d))
  double sigma2;        // Sigma_d^2 = A_d / (2 d xi_bar)
};

Constants constants(int dim);

// Checks the closed-form d = 2 values; throws NumericalError on mismatch.
void assert_constants();

}  // namespace lorentz
