#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/microdynamics.hpp"
#include "lorentz/rng.hpp"

using namespace lorentz;

namespace {
const ScatteringMap kSpec = ScatteringMap::specular();

template <int D>
double segment_distance(const Vec<D>& a, const Vec<D>& b, const Vec<D>& c) {
  const Vec<D> ab = b - a;
  const double L2 = norm2(ab);
  double t = L2 > 0 ? dot(c - a, ab) / L2 : 0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(a + ab * t - c);
}
}  // namespace

TEST_SUITE("microdynamics") {
  TEST_CASE("empty configuration gives one censored flight") {
    const auto set = make_scatterers<2>(FiniteSpec{2, {}});
    const auto res = evolve<2>(*set, kSpec, 0.1, Vec2{{1, 2}}, Vec2{{0.6, 0.8}}, {50.0});
    CHECK(res.records.empty());
    CHECK(res.censored);
    CHECK(res.q_final[0] == doctest::Approx(1 + 50 * 0.6));
    CHECK(res.q_final[1] == doctest::Approx(2 + 50 * 0.8));
  }

  TEST_CASE("head-on reversal at a single scatterer") {
    const double r = 0.1;
    const auto set = make_scatterers<2>(FiniteSpec{2, {{0, 0}}});
    const auto res = evolve<2>(*set, kSpec, r, Vec2{{-2, 0}}, Vec2{{1, 0}}, {100.0});
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].tau == doctest::Approx(2 - r));
    CHECK(res.records[0].v[0] == doctest::Approx(-1.0));
    CHECK(std::abs(res.records[0].v[1]) < 1e-15);
    CHECK(res.censored);
  }

  TEST_CASE("corridor flight is censored") {
    const auto set = make_scatterers<2>(presets::square_lattice());
    const auto res = evolve<2>(*set, kSpec, 0.1, Vec2{{0.5, 0.25}}, Vec2{{0, 1}}, {1e5});
    CHECK(res.records.empty());
    CHECK(res.censored);
    CHECK(res.t_final == 1e5);
  }

  TEST_CASE("start inside a ball is rejected") {
    const auto set = make_scatterers<2>(presets::square_lattice());
    CHECK_THROWS_AS(evolve<2>(*set, kSpec, 0.1, Vec2{{0.02, 0.01}}, Vec2{{1, 0}}, {10.0}),
                    PreconditionError);
  }

  TEST_CASE("rescaling") {
    MicroResult<2> m;
    m.r = 1e-3;
    CollisionRecord<2> rec;
    rec.tau = 512.3;
    rec.q = Vec2{{1000, -2000}};
    m.records.push_back(rec);
    const auto mt = rescale(m);
    CHECK(mt.records[0].T == doctest::Approx(0.5123));
    CHECK(mt.records[0].Q[0] == doctest::Approx(1.0));
    CHECK(mt.records[0].Q[1] == doctest::Approx(-2.0));
  }

  TEST_CASE("speed, exit-parameter norm, frame recursion and no penetration") {
    const double r = 0.05;
    for (const ScattererConfig& cfg : {ScattererConfig{presets::square_lattice()},
                                       ScattererConfig{PoissonSpec{2, 3, 1.0}},
                                       ScattererConfig{presets::rotated_union({0.5, 0.5})}}) {
      const auto set = make_scatterers<2>(cfg);
      Stream rng(11, 0);
      for (int p = 0; p < 20; ++p) {
        const auto [q0, v0] = random_start<2>(*set, r, 10.0, rng);
        MicroStop stop;
        stop.t_max = 1e6;
        stop.n_max = 200;
        const auto res = evolve<2>(*set, kSpec, r, q0, v0, stop);
        FrameTracker<2> ft(v0);
        Vec2 a = q0;
        double last = 0;
        for (const auto& c : res.records) {
          CHECK(std::abs(norm(c.v) - 1) < 1e-12);
          CHECK(std::abs(norm(c.s) - std::abs(c.w[0])) < 1e-12);
          CHECK(c.tau > last);
          last = c.tau;
          ft.push(c.w, kSpec);
          CHECK(norm(ft.velocity() - c.v) < 1e-10);
          const Vec2 b = c.q;
          for (const auto& s : points_in_ball(*set, (a + b) * 0.5, norm(b - a) / 2 + r))
            CHECK(segment_distance(a, b, s.x) >= r - 1e-12);
          a = b;
        }
      }
    }
  }

  // Dispersing billiards amplify round-off by roughly 2l/(r cos phi) per
  // collision, so a whole-path reversal only agrees to 1e-9 for a few
  // collisions at small r. Each flight is therefore reversed on its own,
  // starting from its midpoint.
  TEST_CASE("time reversal retraces every flight") {
    const double r = 0.05;
    for (const ScattererConfig& cfg :
         {ScattererConfig{presets::square_lattice()}, ScattererConfig{PoissonSpec{2, 8, 1.0}},
          ScattererConfig{presets::rotated_union({0.5, 0.5})}}) {
      const auto set = make_scatterers<2>(cfg);
      Stream rng(12, 0);
      const auto [q0, v0] = random_start<2>(*set, r, 10.0, rng);
      MicroStop stop;
      stop.t_max = 1e7;
      stop.n_max = 60;
      const auto fwd = evolve<2>(*set, kSpec, r, q0, v0, stop);
      REQUIRE(fwd.records.size() == 60);
      for (std::size_t n = 1; n + 1 < fwd.records.size(); ++n) {
        const auto& prev = fwd.records[n - 1];
        const auto& cur = fwd.records[n];
        const auto& next = fwd.records[n + 1];
        const double half = 0.5 * (next.tau - cur.tau);
        const Vec2 mid = cur.q + cur.v * half;
        MicroStop one;
        one.t_max = 1e7;
        one.n_max = 1;
        const auto rev = evolve<2>(*set, kSpec, r, mid, -cur.v, one);
        REQUIRE(rev.records.size() == 1);
        CHECK(norm(rev.records[0].y - cur.y) < 1e-9);
        CHECK(std::abs(rev.records[0].tau - half) < 1e-9);
        CHECK(norm(rev.records[0].v + prev.v) < 1e-9);
        CHECK(std::abs(rev.records[0].w[0] + cur.w[0]) < 1e-9);
      }
    }
  }

  TEST_CASE("time reversal over twenty collisions on a stable orbit") {
    // Head-on bouncing between two scatterers: no amplification.
    const double r = 0.1;
    const auto set = make_scatterers<2>(FiniteSpec{2, {{0, 0}, {1, 0}}});
    MicroStop stop;
    stop.t_max = 20.5 * (1 - 2 * r) + 0.1;
    const auto fwd = evolve<2>(*set, kSpec, r, Vec2{{0.5, 0}}, Vec2{{1, 0}}, stop);
    REQUIRE(fwd.records.size() >= 20);
    MicroStop back;
    back.t_max = fwd.t_final;
    const auto rev = evolve<2>(*set, kSpec, r, fwd.q_final, -fwd.v_final, back);
    REQUIRE(rev.records.size() == fwd.records.size());
    const std::size_t m = fwd.records.size();
    for (std::size_t k = 0; k < m; ++k) {
      CHECK(norm(fwd.records[m - 1 - k].y - rev.records[k].y) < 1e-9);
      CHECK(std::abs(fwd.t_final - fwd.records[m - 1 - k].tau - rev.records[k].tau) < 1e-9);
    }
    CHECK(norm(rev.q_final - Vec2{{0.5, 0}}) < 1e-9);
  }

  TEST_CASE("mean rescaled free path in the square lattice") {
    const double r = 1e-3;
    const auto set = make_scatterers<2>(presets::square_lattice());
    Stream rng(13, 0);
    double sum = 0;
    long n = 0;
    for (int p = 0; p < 100; ++p) {
      const auto [q0, v0] = random_start<2>(*set, r, 1.0, rng);
      MicroStop stop;
      stop.t_max = 1e12;
      stop.n_max = 10001;
      const auto mt = rescale(evolve<2>(*set, kSpec, r, q0, v0, stop));
      for (std::size_t i = 1; i < mt.records.size(); ++i) {
        sum += mt.records[i].T - mt.records[i - 1].T;
        ++n;
      }
    }
    CHECK(n == 1000000);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("mean rescaled free path for three-dimensional poisson scatterers") {
    const double r = 1e-2;
    const auto set = make_scatterers<3>(PoissonSpec{3, 21, 1.0});
    Stream rng(14, 0);
    double sum = 0;
    long n = 0;
    for (int p = 0; p < 20; ++p) {
      const auto [q0, v0] = random_start<3>(*set, r, 10.0, rng);
      MicroStop stop;
      stop.t_max = 1e12;
      stop.n_max = 1001;
      const auto mt = rescale(evolve<3>(*set, kSpec, r, q0, v0, stop));
      for (std::size_t i = 1; i < mt.records.size(); ++i) {
        sum += mt.records[i].T - mt.records[i - 1].T;
        ++n;
      }
    }
    CHECK(sum / n == doctest::Approx(1 / M_PI).epsilon(0.02));
  }
}
