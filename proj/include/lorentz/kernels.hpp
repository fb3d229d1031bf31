#pragma once

#include <variant>
#include <vector>

namespace lorentz {

// Exponential free flights with uniform impact parameters, any dimension.
struct PoissonKernel {
  int dim = 2;
};

// Periodic scatterers in the plane (unit density lattice).
struct Lattice2DKernel {};

// N pairwise incommensurable planar lattices with relative densities n_i.
struct UnionKernel {
  std::vector<double> densities;
};

using KernelModel = std::variant<PoissonKernel, Lattice2DKernel, UnionKernel>;

// Scattering data: colour index and signed impact parameter (d = 2).
struct Omega {
  int colour = 0;
  double w = 0;
};

// Validates a model (densities positive, summing to 1 after normalisation)
// and returns it normalised. Throws ConfigError.
KernelModel normalized(KernelModel model);

double xi_bar(const KernelModel& model);
int dimension(const KernelModel& model);
int colour_count(const KernelModel& model);

// Transition density k(omega', xi, omega) against dxi dp(omega).
double k_eval(const KernelModel& model, const Omega& from, double xi, const Omega& to);
// Stationary free-path density Psi_0.
double psi0(const KernelModel& model, double xi);
// Survival function of Psi_0: integral of Psi_0 over (xi, infinity).
double psi0_survival(const KernelModel& model, double xi);
// Initial density K(xi, omega) against dxi dp(omega).
double bigK(const KernelModel& model, double xi, const Omega& to);
// Decay order of Psi_0 for N incommensurable lattices.
double union_tail_exponent(int n);

// Closed forms for the planar lattice kernel. Arguments satisfy |w|, |w'| < 1.
namespace lattice2d {

// 12/pi^2 = 1/(xi_bar zeta(2)), built from the constants module.
double plateau();

double k(double wp, double xi, double w);
double xi_support_max(double wp, double w);
// Integral of k over xi in (0, infinity).
double marginal_w(double wp, double w);
// Integral of k over (xi, infinity).
double tail_mass(double wp, double w, double xi);
// Integral of (xi' - x) k(wp, xi', w) over xi' in (x, infinity).
double tail_first_moment(double wp, double w, double x);
// Integral of xi k over xi in (0, infinity): plateau / (2 a (a - b)).
double first_moment(double wp, double w);
// Integral of k(wp, xi, w) over w in (-1, 1), piecewise closed form.
double k_w_integral(double wp, double xi);
// Checks the two-sided bound (1 - 4 xi) c <= k <= c with c = 12/pi^2.
bool kernel_bounds_check(double wp, double xi, double w);

double psi0(double xi);
// Integral of Psi_0 over (x, infinity); equals 1 at x = 0.
double survival(double x);
// Integral of survival over (x, infinity); equals the mean 1/2 at x = 0.
double survival_integral(double x);
// K(xi, w) = integral of tail_mass over w' in (-1, 1).
double bigK(double xi, double w);
// Density of the w-marginal of K against dw on (-1, 1).
double bigK_w_density(double w);
// Cumulative distribution of the w-marginal of K.
double bigK_w_cdf(double w);
// Cumulative distribution of the xi-marginal of K.
double bigK_xi_cdf(double xi);

// Reference values computed by direct adaptive quadrature (no tables); slow.
double survival_direct(double x);
double survival_integral_direct(double x);

}  // namespace lattice2d

}  // namespace lorentz
