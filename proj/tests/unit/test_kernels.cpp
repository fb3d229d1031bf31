#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/kernels.hpp"
#include "lorentz/numerics.hpp"
#include "lorentz/rng.hpp"

using namespace lorentz;
using std::numbers::pi;

namespace {
const KernelModel kLat = Lattice2DKernel{};
const KernelModel kPoi = PoissonKernel{2};
const double kPlateau = 12 / (pi * pi);

double quad_marginal(double wp, double w) {
  const double m = 1 + std::max(std::abs(w), std::abs(wp));
  return integrate([&](double xi) { return lattice2d::k(wp, xi, w); }, 0.0,
                   lattice2d::xi_support_max(wp, w), {1 / m}, 1e-12, 1e-15)
      .value;
}
}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("lattice kernel values") {
    CHECK(k_eval(kLat, {0, -0.5}, 0.1, {0, 0.5}) == doctest::Approx(1.2158542037080532).epsilon(1e-14));
    CHECK(k_eval(kLat, {0, -0.5}, 1.0, {0, 0.5}) == doctest::Approx(0.6079271018540266).epsilon(1e-14));
    CHECK(k_eval(kLat, {0, -0.5}, 2.5, {0, 0.5}) == 0.0);
    CHECK(lattice2d::plateau() == doctest::Approx(kPlateau).epsilon(1e-15));
    // w = w': indicator of xi < 1/(1 + |w|).
    CHECK(lattice2d::k(0.3, 0.76, 0.3) == doctest::Approx(kPlateau));
    CHECK(lattice2d::k(0.3, 0.78, 0.3) == 0.0);
  }

  TEST_CASE("poisson kernel") {
    CHECK(k_eval(kPoi, {0, 0.9}, 0.5, {0, -0.2}) == doctest::Approx(2 / std::exp(1.0)).epsilon(1e-14));
    CHECK(psi0(kPoi, 0.5) == doctest::Approx(0.7357588823428847).epsilon(1e-14));
    for (double xi : {0.0, 0.3, 1.7})
      CHECK(bigK(kPoi, xi, {0, 0.1}) == doctest::Approx(2 * std::exp(-2 * xi)).epsilon(1e-13));
  }

  TEST_CASE("domain errors") {
    CHECK_THROWS_AS(k_eval(kLat, {0, 1.0}, 0.5, {0, 0.0}), DomainError);
    CHECK_THROWS_AS(k_eval(kLat, {0, 0.0}, 0.5, {0, -1.2}), DomainError);
  }

  TEST_CASE("support bound") {
    CHECK(lattice2d::xi_support_max(-0.5, 0.5) == doctest::Approx(2.0));
    CHECK(lattice2d::xi_support_max(0.0, 0.0) == doctest::Approx(1.0));
    // 1/(0.99 + 1 - 1.98) = 100.
    CHECK(lattice2d::xi_support_max(0.99, -0.99) == doctest::Approx(100.0).epsilon(1e-10));
    Stream rng(1, 0);
    for (int i = 0; i < 20000; ++i) {
      const double wp = rng.uniform(-0.99, 0.99), w = rng.uniform(-0.99, 0.99);
      const double top = lattice2d::xi_support_max(wp, w);
      CHECK(lattice2d::k(wp, top * (1 + 1e-9), w) == 0.0);
      CHECK(lattice2d::k(wp, top * 0.999, w) > 0.0);
    }
  }

  TEST_CASE("closed-form marginal against quadrature") {
    // (12/pi^2) 2 ln 1.5
    CHECK(lattice2d::marginal_w(0.0, 0.5) == doctest::Approx(0.9859729123).epsilon(1e-10));
    CHECK(quad_marginal(0.0, 0.5) == doctest::Approx(0.9859729123).epsilon(1e-8));
    CHECK(lattice2d::marginal_w(0.0, 0.0) == doctest::Approx(kPlateau).epsilon(1e-14));
    Stream rng(2, 0);
    for (int i = 0; i < 300; ++i) {
      const double wp = rng.uniform(-0.99, 0.99), w = rng.uniform(-0.99, 0.99);
      CHECK(std::abs(lattice2d::marginal_w(wp, w) - quad_marginal(wp, w)) < 1e-8);
    }
    const double total =
        0.5 * integrate([](double w) { return lattice2d::marginal_w(0.0, w); }, -1, 1, {0.0}).value;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("symmetry is exact") {
    Stream rng(3, 0);
    for (int i = 0; i < 100000; ++i) {
      const double wp = rng.uniform(-1, 1), w = rng.uniform(-1, 1), xi = rng.uniform(0, 3);
      REQUIRE(lattice2d::k(wp, xi, w) == lattice2d::k(w, xi, wp));
      REQUIRE(lattice2d::k(wp, xi, w) == lattice2d::k(-wp, xi, -w));
    }
    const KernelModel u = UnionKernel{{0.3, 0.7}};
    for (int i = 0; i < 2000; ++i) {
      const Omega a{static_cast<int>(rng.below(2)), rng.uniform(-1, 1)};
      const Omega b{static_cast<int>(rng.below(2)), rng.uniform(-1, 1)};
      const double xi = rng.uniform(0, 3);
      REQUIRE(k_eval(u, a, xi, b) == doctest::Approx(k_eval(u, b, xi, a)).epsilon(1e-12));
    }
  }

  TEST_CASE("two-sided bounds") {
    Stream rng(4, 0);
    for (double wp : {-0.9, -0.3, 0.0, 0.4, 0.95})
      for (double w : {-0.8, 0.0, 0.5, 0.99}) {
        CHECK(lattice2d::kernel_bounds_check(wp, 0.01, w));
        CHECK(lattice2d::k(wp, 0.01, w) >= 0.96 * kPlateau);
        CHECK(lattice2d::kernel_bounds_check(wp, 10.0, w));
      }
    long bad = 0;
    for (int i = 0; i < 1000000; ++i)
      if (!lattice2d::kernel_bounds_check(rng.uniform(-1, 1), rng.uniform(0, 2), rng.uniform(-1, 1))) ++bad;
    CHECK(bad == 0);
  }

  TEST_CASE("free path density") {
    CHECK(lattice2d::psi0(1e-3) == doctest::Approx(kPlateau).epsilon(1e-3));
    CHECK(lattice2d::psi0(1e-3) == doctest::Approx(1.21585420371).epsilon(1e-10));
    const double asym = 1 / (pi * pi * 125000);
    CHECK(std::abs(lattice2d::psi0(50) / asym - 1) < 0.1);
    CHECK(lattice2d::psi0(50) == doctest::Approx(8.16706095219e-7).epsilon(1e-8));
    for (double xi = 20; xi <= 100; xi += 5)
      CHECK(std::abs(xi * xi * xi * lattice2d::psi0(xi) * pi * pi - 1) < 0.05);
    CHECK(lattice2d::survival(0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(lattice2d::survival_integral(0.0) == doctest::Approx(0.5).epsilon(1e-10));
    for (double x : {0.05, 0.5, 1.0, 3.0, 30.0}) {
      CHECK(lattice2d::survival(x) == doctest::Approx(lattice2d::survival_direct(x)).epsilon(1e-7));
      CHECK(lattice2d::survival_integral(x) ==
            doctest::Approx(lattice2d::survival_integral_direct(x)).epsilon(1e-7));
    }
  }

  TEST_CASE("psi0 is the double average of k") {
    for (double xi : {0.2, 0.7, 1.3, 4.0}) {
      const double direct =
          0.25 * integrate(
                     [&](double wp) {
                       return integrate([&](double w) { return lattice2d::k(wp, xi, w); }, -1, 1,
                                        {wp, -wp, 0.0}, 1e-10, 1e-13, false)
                           .value;
                     },
                     -1, 1, {0.0}, 1e-9, 1e-12, false)
                     .value;
      CHECK(lattice2d::psi0(xi) == doctest::Approx(direct).epsilon(1e-6));
    }
  }

  TEST_CASE("initial density") {
    CHECK(bigK(kLat, 0.0, {0, 0.3}) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(bigK(kLat, 0.0, {0, -0.9}) == doctest::Approx(2.0).epsilon(1e-6));
    // Total mass: integrate the xi-marginal density 2 * S1.
    const double mass = integrate([](double w) { return lattice2d::bigK_w_density(w); }, -1, 1, {0.0}).value;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(lattice2d::bigK_w_cdf(1.0 - 1e-15) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lattice2d::bigK_xi_cdf(1e9) == doctest::Approx(1.0).epsilon(1e-6));
    // K(xi, w) against its definition as the integral of the tail mass over w'.
    for (double xi : {0.1, 0.8, 2.5})
      for (double w : {-0.6, 0.2}) {
        const double direct =
            0.5 * 2 *
            integrate([&](double wp) { return lattice2d::tail_mass(wp, w, xi); }, -1, 1, {w, -w, 0.0},
                      1e-10, 1e-13, false)
                .value;
        CHECK(lattice2d::bigK(xi, w) == doctest::Approx(direct).epsilon(1e-7));
      }
  }

  TEST_CASE("union reduces to one lattice when N = 1") {
    const KernelModel u1 = UnionKernel{{1.0}};
    Stream rng(5, 0);
    for (int i = 0; i < 2000; ++i) {
      const double wp = rng.uniform(-0.99, 0.99), w = rng.uniform(-0.99, 0.99), xi = rng.uniform(0, 3);
      REQUIRE(k_eval(u1, {0, wp}, xi, {0, w}) == doctest::Approx(k_eval(kLat, {0, wp}, xi, {0, w})));
    }
    for (double xi : {0.1, 1.0, 5.0}) CHECK(psi0(u1, xi) == doctest::Approx(psi0(kLat, xi)).epsilon(1e-9));
  }

  TEST_CASE("union normalisation") {
    const KernelModel u = UnionKernel{{0.5, 0.5}};
    // Sum over colours of the integral of k over xi and w, from one incoming state.
    double total = 0;
    for (int c = 0; c < 2; ++c)
      total += 0.5 * 0.5 *
               integrate(
                   [&](double w) {
                     return integrate([&](double xi) { return k_eval(u, {0, 0.3}, xi, {c, w}); }, 0, 4,
                                      {0.5, 1.0, 2.0}, 1e-9, 1e-12, false)
                                .value +
                            integrate_to_inf([&](double xi) { return k_eval(u, {0, 0.3}, xi, {c, w}); },
                                             4, 1e-9, 1e-12)
                                .value;
                   },
                   -1, 1, {0.3, -0.3, 0.0}, 1e-8, 1e-11, false)
                   .value;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(xi_bar(u) == doctest::Approx(0.5));
  }

  TEST_CASE("tail exponents") {
    CHECK(union_tail_exponent(1) == 3.0);
    CHECK(union_tail_exponent(2) == 4.0);
    CHECK(union_tail_exponent(3) == 5.0);
  }
}
