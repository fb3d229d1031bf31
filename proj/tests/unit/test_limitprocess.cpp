#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/limitprocess.hpp"
#include "lorentz/numerics.hpp"
#include "lorentz/stats.hpp"

using namespace lorentz;

namespace {
const ScatteringMap kSpec = ScatteringMap::specular();
}

TEST_SUITE("limitprocess") {
  TEST_CASE("poisson transition draws") {
    const LimitSampler<2> s(PoissonKernel{2});
    Stream rng(1, 0);
    const int n = 1000000;
    double sum = 0;
    std::vector<double> ws;
    for (int i = 0; i < n; ++i) {
      const auto f = s.transition(0, Impact<2>{{0.4}}, rng);
      sum += f.xi;
      ws.push_back(f.w[0]);
    }
    CHECK(std::abs(sum / n - 0.5) < 0.002);
    const auto ks = ks_distance(EmpiricalDistribution(ws), [](double w) { return 0.5 * (w + 1); });
    CHECK(ks.distance < 0.002);
  }

  TEST_CASE("poisson initial draws match transitions in law") {
    const LimitSampler<2> s(PoissonKernel{2});
    Stream rng(2, 0);
    std::vector<double> xi;
    for (int i = 0; i < 200000; ++i) xi.push_back(s.initial(rng).xi);
    const auto ks = ks_distance(EmpiricalDistribution(xi), [](double x) { return 1 - std::exp(-2 * x); });
    CHECK(ks.distance < 0.005);
  }

  TEST_CASE("lattice transition respects the support") {
    Stream rng(3, 0);
    for (int i = 0; i < 200000; ++i) {
      const double wp = rng.uniform(-0.999, 0.999);
      const auto f = lattice2d::sample_transition(wp, rng);
      REQUIRE(f.xi > 0);
      REQUIRE(std::abs(f.w[0]) < 1);
      REQUIRE(f.xi <= lattice2d::xi_support_max(wp, f.w[0]));
    }
  }

  TEST_CASE("lattice transition: stationary input gives psi0") {
    Stream rng(4, 0);
    std::vector<double> xi;
    for (int i = 0; i < 1000000; ++i) xi.push_back(lattice2d::sample_transition(rng.uniform(-1, 1), rng).xi);
    const auto ks = ks_distance(EmpiricalDistribution(xi), [](double x) { return 1 - lattice2d::survival(x); });
    CHECK(ks.distance <= 0.005);
  }

  TEST_CASE("lattice transition conditional on w' against the kernel") {
    // Joint (xi, w) histogram at fixed w' against cell masses from quadrature of k.
    const double wp = 0.35;
    const int nxi = 12, nw = 10, n = 400000;
    const double xmax = 1.5;
    std::vector<double> obs(nxi * nw, 0);
    Stream rng(5, 0);
    for (int i = 0; i < n; ++i) {
      const auto f = lattice2d::sample_transition(wp, rng);
      if (f.xi >= xmax) continue;
      const int a = std::min(nxi - 1, static_cast<int>(f.xi / xmax * nxi));
      const int b = std::min(nw - 1, static_cast<int>((f.w[0] + 1) / 2 * nw));
      obs[a * nw + b] += 1;
    }
    int outside = 0;
    for (int a = 0; a < nxi; ++a)
      for (int b = 0; b < nw; ++b) {
        const double x0 = a * xmax / nxi, x1 = (a + 1) * xmax / nxi;
        const double w0 = -1 + 2.0 * b / nw, w1 = -1 + 2.0 * (b + 1) / nw;
        const double p =
            0.5 * integrate(
                      [&](double w) {
                        return integrate([&](double x) { return lattice2d::k(wp, x, w); }, x0, x1,
                                         {1 / (1 + std::max(std::abs(w), wp)),
                                          lattice2d::xi_support_max(wp, w)},
                                         1e-9, 1e-12, false)
                            .value;
                      },
                      w0, w1, {wp, -wp}, 1e-8, 1e-11, false)
                      .value;
        const double e = n * p;
        if (e < 20) continue;
        if (std::abs(obs[a * nw + b] - e) > 4 * std::sqrt(e)) ++outside;
      }
    CHECK(outside <= 1);
  }

  TEST_CASE("lattice initial draws") {
    Stream rng(6, 0);
    std::vector<double> xi, w;
    const double L = 5;
    double trunc = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const auto f = lattice2d::sample_initial(rng);
      xi.push_back(f.xi);
      w.push_back(f.w[0]);
      trunc += std::min(f.xi, L);
    }
    CHECK(ks_distance(EmpiricalDistribution(w), lattice2d::bigK_w_cdf).distance <= 0.005);
    CHECK(ks_distance(EmpiricalDistribution(xi), lattice2d::bigK_xi_cdf).distance <= 0.005);
    // E[min(xi, L)] = integral of the survival 2 S1 over (0, L).
    const double oracle =
        2 * integrate([](double x) { return lattice2d::survival_integral(x); }, 0, L, {1.0}).value;
    CHECK(trunc / n == doctest::Approx(oracle).epsilon(0.01));
  }

  TEST_CASE("union sampler keeps the colour proportions") {
    const LimitSampler<2> s(UnionKernel{{0.25, 0.75}});
    Stream rng(7, 0);
    const int n = 200000;
    int c1 = 0;
    double sum = 0;
    std::vector<double> xi;
    for (int i = 0; i < n; ++i) {
      const auto w = s.stationary_omega(rng);
      const auto f = s.transition(w.colour, w.w, rng);
      c1 += f.colour;
      sum += f.xi;
      xi.push_back(f.xi);
    }
    CHECK(static_cast<double>(c1) / n == doctest::Approx(0.75).epsilon(0.01));
    const KernelModel m = UnionKernel{{0.25, 0.75}};
    CHECK(ks_distance(EmpiricalDistribution(xi), [&](double x) { return 1 - psi0_survival(m, x); }).distance <
          0.006);
  }

  TEST_CASE("sampler rejects a model of the wrong dimension") {
    CHECK_THROWS_AS(LimitSampler<3>(Lattice2DKernel{}), ConfigError);
    CHECK_NOTHROW(LimitSampler<3>(PoissonKernel{3}));
  }

  TEST_CASE("path evaluation") {
    const LimitSampler<2> s(Lattice2DKernel{});
    const Vec2 Q0{{1, 2}}, V0{{0.6, 0.8}};
    StopRule none;
    none.n_max = 0;
    const auto p0 = run_chain<2>(s, kSpec, Q0, V0, none, Stream(8, 0));
    const auto at = eval_path(p0, 0.0);
    CHECK(at.Q == Q0);
    CHECK(at.V == V0);

    StopRule stop;
    stop.t_max = 20;
    const auto path = run_chain<2>(s, kSpec, Q0, V0, stop, Stream(8, 1));
    REQUIRE(path.states.size() > 3);
    const auto& st = path.states;
    const double T1 = st[1].T;
    CHECK(T1 == st[1].xi);
    const auto mid = eval_path(path, T1 / 2);
    CHECK(norm(mid.Q - (Q0 + V0 * (T1 / 2))) < 1e-14);
    const auto first = eval_path(path, T1);
    CHECK(norm(first.Q - (Q0 + V0 * T1)) < 1e-12);
    CHECK(norm(first.V - st[1].V) < 1e-14);
    CHECK(extended_state(path, 0.0).T_next == doctest::Approx(st[1].xi));
    CHECK_THROWS_AS(eval_path(path, 25.0), RangeError);

    // Counting function brackets t, velocities stay unit.
    FrameTracker<2> ft(V0);
    for (std::size_t n = 1; n < st.size(); ++n) {
      CHECK(st[n].T > st[n - 1].T);
      CHECK(std::abs(norm(st[n].V) - 1) < 1e-12);
      ft.push(st[n].h, kSpec);
      CHECK(norm(ft.velocity() - st[n].V) < 1e-10);
    }
    for (double t = 0; t <= 20; t += 0.37) {
      const auto e = extended_state(path, t);
      std::size_t k = 0;
      while (k + 1 < st.size() && st[k + 1].T <= t) ++k;
      CHECK(st[k].T <= t);
      CHECK(t < st[k + 1].T);
      CHECK(e.T_next == doctest::Approx(st[k + 1].T - t));
      CHECK(norm(e.V_plus - st[k + 1].V) < 1e-14);
    }
  }

  TEST_CASE("poisson renewal count") {
    const LimitSampler<2> s(PoissonKernel{2});
    const int paths = 100000;
    double sum = 0;
    for (int i = 0; i < paths; ++i) {
      ChainStepper<2> c(s, kSpec, Vec2{}, Vec2{{1, 0}}, Stream(9, static_cast<std::uint64_t>(i)));
      while (c.pending().T <= 100) c.step();
      sum += static_cast<double>(c.current().n);
    }
    CHECK(sum / paths == doctest::Approx(200.0).epsilon(0.01));
  }

  TEST_CASE("poisson residual time is exponential") {
    const LimitSampler<2> s(PoissonKernel{2});
    std::vector<double> res;
    for (int i = 0; i < 50000; ++i) {
      ChainStepper<2> c(s, kSpec, Vec2{}, Vec2{{1, 0}}, Stream(10, static_cast<std::uint64_t>(i)));
      c.position_at(30.0);
      res.push_back(c.pending().T - 30.0);
    }
    CHECK(ks_distance(EmpiricalDistribution(res), [](double x) { return 1 - std::exp(-2 * x); }).distance <
          0.01);
  }

  TEST_CASE("paths are reproducible from the stream") {
    const LimitSampler<2> s(Lattice2DKernel{});
    StopRule stop;
    stop.t_max = 50;
    const auto a = run_chain<2>(s, kSpec, Vec2{}, Vec2{{1, 0}}, stop, Stream(11, 3));
    const auto b = run_chain<2>(s, kSpec, Vec2{}, Vec2{{1, 0}}, stop, Stream(11, 3));
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i].Q == b.states[i].Q);
  }
}
