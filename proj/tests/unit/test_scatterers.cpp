#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <utility>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/microdynamics.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/scatterers.hpp"

using namespace lorentz;

namespace {

std::unique_ptr<ScattererSet<2>> make2(const ScattererConfig& c) { return make_scatterers<2>(c); }

// Entry time of q + t v into the ball B(c, r), or +inf.
double entry_time(const Vec2& q, const Vec2& v, const Vec2& c, double r) {
  const Vec2 d = c - q;
  const double along = dot(d, v);
  const double perp2 = norm2(d) - along * along;
  if (perp2 >= r * r * (1 - 1e-9)) return std::numeric_limits<double>::infinity();
  const double t = along - std::sqrt(r * r - perp2);
  return t > 0 ? t : std::numeric_limits<double>::infinity();
}

// Brute force over the enumerated tube around the segment [q, q + L v].
double brute_first_hit(const ScattererSet<2>& set, const Vec2& q, const Vec2& v, double r, double L) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : points_in_ball(set, q + v * (L / 2), L / 2 + r))
    best = std::min(best, entry_time(q, v, s.x, r));
  return best <= L ? best : std::numeric_limits<double>::infinity();
}

void completeness(const ScattererConfig& cfg, double r, int trials, std::uint64_t seed) {
  const auto set = make2(cfg);
  Stream rng(seed, 0);
  const double L = 20;
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    const auto [q, v] = random_start<2>(*set, r, 50.0, rng);
    const auto hit = set->first_hit(q, v, r, L);
    const double bf = brute_first_hit(*set, q, v, r, L);
    if (hit) {
      ++hits;
      REQUIRE(hit->entry_time == doctest::Approx(bf).epsilon(1e-9));
      CHECK(std::abs(norm(q + v * hit->entry_time - hit->center) - r) < 1e-9);
      CHECK(std::abs(hit->impact[0]) < 1.0);
    } else {
      REQUIRE(std::isinf(bf));
    }
  }
  CHECK(hits > trials / 10);
}

}  // namespace

TEST_SUITE("scatterers") {
  TEST_CASE("square lattice ball enumeration") {
    const auto z2 = make2(presets::square_lattice());
    const auto pts = points_in_ball(*z2, Vec2{{0, 0}}, 1.5);
    CHECK(pts.size() == 9);
    std::set<std::pair<long, long>> got;
    for (const auto& p : pts) got.insert({std::lround(p.x[0]), std::lround(p.x[1])});
    for (long i = -1; i <= 1; ++i)
      for (long j = -1; j <= 1; ++j) CHECK(got.count({i, j}) == 1);
  }

  TEST_CASE("first hit examples") {
    const auto z2 = make2(presets::square_lattice());
    const auto hit = z2->first_hit(Vec2{{0.5, 0}}, Vec2{{1, 0}}, 0.1, 10.0);
    REQUIRE(hit);
    CHECK(hit->center[0] == doctest::Approx(1.0));
    CHECK(std::abs(hit->center[1]) < 1e-12);
    CHECK(hit->entry_time == doctest::Approx(0.4));
    CHECK(std::abs(hit->impact[0]) < 1e-12);

    CHECK_FALSE(z2->first_hit(Vec2{{0.5, 0.25}}, Vec2{{0, 1}}, 0.3, 1e6));

    const auto one = make2(FiniteSpec{2, {{0, 0}}});
    const auto h1 = one->first_hit(Vec2{{-2, 0.05}}, Vec2{{1, 0}}, 0.1, 100.0);
    REQUIRE(h1);
    CHECK(std::abs(h1->impact[0]) == doctest::Approx(0.5));
    // Entry above the centre: offset b points in +y, which is w > 0 here.
    CHECK(h1->impact[0] > 0);
    CHECK(h1->entry_time == doctest::Approx(2 - 0.1 * std::cos(std::asin(0.5))));
    CHECK(h1->entry_time == doctest::Approx(1.9134).epsilon(1e-4));
  }

  TEST_CASE("start inside a ball is rejected") {
    const auto z2 = make2(presets::square_lattice());
    CHECK_THROWS_AS(z2->first_hit(Vec2{{0.05, 0}}, Vec2{{1, 0}}, 0.1, 10.0), PreconditionError);
  }

  TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(make2(LatticeSpec{{{1, 0}, {2, 0}}}), ConfigError);
    CHECK_THROWS_AS(make2(LatticeSpec{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}), ConfigError);
    UnionSpec u;
    CHECK_THROWS_AS(make2(u), ConfigError);
    // Commensurable members with the incommensurability flag set.
    u.members.push_back({{presets::square_lattice(), {0, 0}}, std::nullopt});
    u.members.push_back({{presets::square_lattice(), {0.5, 0.5}}, std::nullopt});
    CHECK_THROWS_AS(make2(u), ConfigError);
    u.incommensurable = false;
    CHECK_NOTHROW(make2(u));
  }

  TEST_CASE("densities") {
    const auto z2 = make2(presets::square_lattice());
    CHECK(density_of<2>(*z2, 100, Vec2{{0, 0}}, Vec2{{1, 1}}) == doctest::Approx(1.0).epsilon(0.03));
    const auto un = make2(presets::rotated_union({0.5, 0.5}));
    CHECK(un->nominal_density() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(density_of<2>(*un, 100, Vec2{{0, 0}}, Vec2{{1, 1}}) == doctest::Approx(1.0).epsilon(0.03));
    const auto ab = make2(presets::ammann_beenker(false));
    CHECK(ab->nominal_density() == doctest::Approx((1 + std::sqrt(2.0)) / 2).epsilon(1e-12));
    CHECK(density_of_ball<2>(*ab, 100) == doctest::Approx((1 + std::sqrt(2.0)) / 2).epsilon(0.01));
  }

  TEST_CASE("honeycomb: two translates double the lattice density") {
    const auto hc = presets::honeycomb_delone();
    const double n0 = 1 / std::abs(hc.lattice.basis[0][0] * hc.lattice.basis[1][1] -
                                   hc.lattice.basis[0][1] * hc.lattice.basis[1][0]);
    const auto d = make2(hc);
    const auto u = make2(presets::honeycomb_union());
    CHECK(d->nominal_density() == doctest::Approx(2 * n0).epsilon(1e-12));
    CHECK(density_of_ball<2>(*d, 150) == doctest::Approx(2 * n0).epsilon(0.01));
    // Same point set through both constructions.
    for (const Vec2 c : {Vec2{{0, 0}}, Vec2{{13.7, -4.2}}}) {
      const auto a = points_in_ball(*d, c, 20), b = points_in_ball(*u, c, 20);
      REQUIRE(a.size() == b.size());
      for (const auto& p : a) {
        double best = 1e300;
        for (const auto& q : b) best = std::min(best, norm(p.x - q.x));
        CHECK(best < 1e-9);
      }
    }
  }

  TEST_CASE("poisson counts have mean equal to the area") {
    const double R = 2.0;
    const int seeds = 10000;
    double sum = 0;
    for (int s = 0; s < seeds; ++s) {
      const auto set = make2(PoissonSpec{2, static_cast<std::uint64_t>(s), 1.0});
      sum += static_cast<double>(points_in_ball(*set, Vec2{{0.3, 0.7}}, R).size());
    }
    const double area = M_PI * R * R;
    CHECK(std::abs(sum / seeds - area) < 4 * std::sqrt(area / seeds));
  }

  TEST_CASE("poisson counts in disjoint boxes are independent") {
    // Joint table of counts in [0,1]^2 and [1.5,2.5]x[0,1], capped at 3.
    const int seeds = 100000, cap = 3;
    double table[4][4] = {};
    for (int s = 0; s < seeds; ++s) {
      const auto set = make2(PoissonSpec{2, static_cast<std::uint64_t>(s) + 77, 1.0});
      int a = 0, b = 0;
      for (const auto& p : points_in_ball(*set, Vec2{{1.25, 0.5}}, 1.7)) {
        if (p.x[1] < 0 || p.x[1] >= 1) continue;
        if (p.x[0] >= 0 && p.x[0] < 1) ++a;
        if (p.x[0] >= 1.5 && p.x[0] < 2.5) ++b;
      }
      table[std::min(a, cap)][std::min(b, cap)] += 1;
    }
    double pmf[4];
    double rest = 1;
    for (int k = 0; k < cap; ++k) {
      pmf[k] = std::exp(-1.0) / std::tgamma(k + 1.0);
      rest -= pmf[k];
    }
    pmf[cap] = rest;
    double chi2 = 0;
    for (int i = 0; i <= cap; ++i)
      for (int j = 0; j <= cap; ++j) {
        const double e = seeds * pmf[i] * pmf[j];
        chi2 += (table[i][j] - e) * (table[i][j] - e) / e;
      }
    // 15 degrees of freedom, 1% level.
    CHECK(chi2 < 30.58);
  }

  TEST_CASE("queries are deterministic") {
    const auto a = make2(PoissonSpec{2, 99, 1.0});
    const auto b = make2(PoissonSpec{2, 99, 1.0});
    const Vec2 q{{0.123, 0.456}}, v{{0.6, 0.8}};
    const auto ha = a->first_hit(q, v, 0.01, 1e3), hb = b->first_hit(q, v, 0.01, 1e3);
    REQUIRE(ha);
    REQUIRE(hb);
    CHECK(ha->entry_time == hb->entry_time);
    CHECK(ha->center == hb->center);
  }

  TEST_CASE("cut-and-project sets have no duplicate points") {
    const auto ab = make2(presets::ammann_beenker(true));
    auto pts = points_in_ball(*ab, Vec2{{3.3, -1.1}}, 40);
    std::vector<std::pair<double, double>> k;
    for (auto& p : pts) k.push_back({p.x[0], p.x[1]});
    std::sort(k.begin(), k.end());
    for (std::size_t i = 1; i < k.size(); ++i)
      CHECK(std::hypot(k[i].first - k[i - 1].first, k[i].second - k[i - 1].second) > 1e-6);
  }

  TEST_CASE("density estimates settle as R grows") {
    const auto ab = make2(presets::ammann_beenker(true));
    const auto un = make2(presets::rotated_union({0.5, 0.5}));
    for (const auto* s : {ab.get(), un.get()}) {
      const double d50 = density_of_ball<2>(*s, 50), d100 = density_of_ball<2>(*s, 100),
                   d200 = density_of_ball<2>(*s, 200);
      CHECK(std::abs(d200 - d100) < 0.02);
      CHECK(std::abs(d100 - d50) < 0.04);
      CHECK(std::abs(d200 - s->nominal_density()) < 0.01);
    }
  }

  TEST_CASE("first hit agrees with brute force enumeration") {
    completeness(presets::square_lattice(), 0.05, 10000, 1);
    completeness(PoissonSpec{2, 5, 1.0}, 0.05, 10000, 2);
    completeness(presets::rotated_union({0.5, 0.5}), 0.05, 10000, 3);
    completeness(presets::honeycomb_delone(), 0.05, 10000, 4);
    completeness(presets::ammann_beenker(true), 0.05, 10000, 5);
  }
}
