#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/scattering.hpp"

using namespace lorentz;
using std::numbers::pi;

namespace {

// Raw mirror reflection at the entry point of a unit sphere hit with
// perpendicular offset b.
template <int D>
Vec<D> mirror(const Vec<D>& v, const Vec<D>& b) {
  const Vec<D> n = b - v * std::sqrt(1 - norm2(b));
  return v - n * (2 * dot(v, n));
}

template <int D>
Vec<D> random_unit(Stream& s) {
  Vec<D> v;
  for (int i = 0; i < D; ++i) v[i] = s.normal();
  return normalized(v);
}

// Random vector orthogonal to v with norm below 1.
template <int D>
Vec<D> random_offset(const Vec<D>& v, Stream& s) {
  Vec<D> b = random_unit<D>(s);
  b -= v * dot(b, v);
  return normalized(b) * s.uniform(0.0, 0.999);
}

}  // namespace

TEST_SUITE("scattering") {
  TEST_CASE("planar examples") {
    const auto spec = ScatteringMap::specular();
    const Vec2 e1{{1, 0}};
    const Vec2 back = scatter<2>(e1, Impact<2>{{0.0}}, spec);
    CHECK(back[0] == doctest::Approx(-1.0));
    CHECK(std::abs(back[1]) < 1e-15);

    const double h = std::sqrt(0.5);
    const Vec2 up = scatter<2>(e1, Impact<2>{{h}}, spec);
    CHECK(std::abs(up[0]) < 1e-15);
    CHECK(up[1] == doctest::Approx(1.0));

    const Vec2 s = exit_parameter<2>(e1, Impact<2>{{h}}, spec);
    CHECK(s[0] == doctest::Approx(-h));
    CHECK(std::abs(s[1]) < 1e-15);
    CHECK(norm(exit_parameter<2>(e1, Impact<2>{{0.0}}, spec)) == 0.0);
  }

  TEST_CASE("backscattering at w = 0 for any direction") {
    Stream rng(1, 0);
    const auto spec = ScatteringMap::specular();
    for (int i = 0; i < 100; ++i) {
      const Vec2 u = random_unit<2>(rng);
      const Vec2 out = scatter<2>(u, Impact<2>{{0.0}}, spec);
      CHECK(norm(out + u) < 1e-14);
      const Vec3 u3 = random_unit<3>(rng);
      CHECK(norm(scatter<3>(u3, Impact<3>{{0.0, 0.0}}, spec) + u3) < 1e-14);
    }
  }

  TEST_CASE("domain errors") {
    const auto spec = ScatteringMap::specular();
    CHECK_THROWS_AS(scatter<2>(Vec2{{1, 0}}, Impact<2>{{1.0}}, spec), DomainError);
    CHECK_THROWS_AS(exit_parameter<2>(Vec2{{1, 0}}, Impact<2>{{-1.5}}, spec), DomainError);
    CHECK_THROWS_AS(scatter<3>(Vec3{{1, 0, 0}}, Impact<3>{{0.8, 0.8}}, spec), DomainError);
  }

  TEST_CASE("frames map v to e1") {
    Stream rng(2, 0);
    for (int i = 0; i < 1000; ++i) {
      const Vec2 v = random_unit<2>(rng);
      CHECK(norm(v * frame(v) - unit<2>(0)) < 1e-14);
      const Vec3 u = random_unit<3>(rng);
      const Mat<3> R = frame(u);
      CHECK(norm(u * R - unit<3>(0)) < 1e-13);
      CHECK(std::abs(det(R) - 1) < 1e-12);
    }
  }

  TEST_CASE("ambient scattering reproduces mirror geometry and norms") {
    Stream rng(3, 0);
    const auto spec = ScatteringMap::specular();
    for (int i = 0; i < 2000; ++i) {
      const Vec2 v = random_unit<2>(rng);
      const Vec2 b = random_offset<2>(v, rng);
      Vec2 s;
      const Vec2 out = scatter_ambient<2>(v, b, spec, &s);
      CHECK(norm(out - mirror(v, b)) < 1e-12);
      CHECK(std::abs(norm(out) - 1) < 1e-12);
      CHECK(std::abs(norm(s) - norm(b)) < 1e-12);
      // Frame route agrees with the ambient one.
      FrameTracker<2> ft(v);
      CHECK(norm(scatter<2>(v, ft.to_frame(b), spec) - out) < 1e-12);

      const Vec3 v3 = random_unit<3>(rng);
      const Vec3 b3 = random_offset<3>(v3, rng);
      Vec3 s3;
      const Vec3 out3 = scatter_ambient<3>(v3, b3, spec, &s3);
      CHECK(norm(out3 - mirror(v3, b3)) < 1e-12);
      CHECK(std::abs(norm(s3) - norm(b3)) < 1e-12);
      FrameTracker<3> ft3(v3);
      CHECK(norm(scatter<3>(v3, ft3.to_frame(b3), spec) - out3) < 1e-12);
    }
  }

  TEST_CASE("exit parameter norm equals impact norm") {
    Stream rng(4, 0);
    const auto spec = ScatteringMap::specular();
    for (int i = 0; i < 1000; ++i) {
      const Vec2 v = random_unit<2>(rng);
      const double w = rng.uniform(-0.999, 0.999);
      CHECK(std::abs(norm(exit_parameter<2>(v, Impact<2>{{w}}, spec)) - std::abs(w)) < 1e-12);
    }
  }

  TEST_CASE("frame recursion matches the incremental velocity") {
    Stream rng(5, 0);
    const auto spec = ScatteringMap::specular();
    Vec3 v = random_unit<3>(rng);
    FrameTracker<3> ft(v);
    for (int n = 0; n < 500; ++n) {
      Impact<3> w{{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)}};
      v = scatter_ambient<3>(v, ft.from_frame(w), spec, nullptr);
      ft.push(w, spec);
      REQUIRE(norm(ft.velocity() - v) < 1e-10);
    }
    Vec2 u{{0.6, 0.8}};
    FrameTracker<2> f2(u);
    for (int n = 0; n < 500; ++n) {
      const Impact<2> w{{rng.uniform(-0.99, 0.99)}};
      u = scatter<2>(u, w, spec);
      f2.push(w, spec);
      REQUIRE(norm(f2.velocity() - u) < 1e-10);
    }
  }

  TEST_CASE("tabulated maps") {
    std::vector<double> w, th;
    for (int i = 0; i <= 2000; ++i) {
      w.push_back(0.999 * i / 2000);
      th.push_back(pi - 2 * std::asin(w.back()));
    }
    const auto tab = ScatteringMap::tabulated(w, th);
    const auto spec = ScatteringMap::specular();
    for (double x : {0.0, 0.2, 0.5, 0.9})
      CHECK(tab.theta(x) == doctest::Approx(spec.theta(x)).epsilon(1e-6));
    CHECK(spec.theta(0.0) == doctest::Approx(pi));
    CHECK_THROWS_AS(ScatteringMap::tabulated({0, 0.5}, {pi, pi + 0.1}), ConfigError);
    CHECK_THROWS_AS(ScatteringMap::tabulated({0, 0.5}, {3.0, 2.0}), ConfigError);
    CHECK_NOTHROW(ScatteringMap::tabulated({0, 0.5, 0.9}, {-pi, -2.0, -0.5}));
  }
}
