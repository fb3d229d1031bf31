#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "lorentz/rng.hpp"

using namespace lorentz;

TEST_SUITE("rng") {
  // Random123 known-answer vectors for philox4x32-10.
  TEST_CASE("philox4x32 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("uniform lies in the open unit interval with the right moments") {
    Stream s(7, 0);
    double sum = 0, sum2 = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      sum2 += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.002));
    CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.005));
  }

  TEST_CASE("streams are reproducible and distinct per id") {
    Stream a(42, {1, 2, 3}), b(42, {1, 2, 3}), c(42, {1, 2, 4}), d(43, {1, 2, 3});
    std::vector<std::uint64_t> xa, xb;
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 100; ++i) {
      const auto va = a.next_u64();
      xa.push_back(va);
      xb.push_back(b.next_u64());
      differs_c |= c.next_u64() != va;
      differs_d |= d.next_u64() != va;
    }
    CHECK(xa == xb);
    CHECK(differs_c);
    CHECK(differs_d);
  }

  TEST_CASE("neighbouring streams are uncorrelated") {
    const int n = 200000;
    double sxy = 0, sx = 0, sy = 0;
    for (int i = 0; i < n; ++i) {
      Stream a(5, static_cast<std::uint64_t>(i)), b(5, static_cast<std::uint64_t>(i + 1));
      const double x = a.uniform() - 0.5, y = b.uniform() - 0.5;
      sxy += x * y;
      sx += x;
      sy += y;
    }
    const double corr = (sxy / n - sx / n * sy / n) * 12.0;
    CHECK(std::abs(corr) < 5.0 / std::sqrt(n));
  }

  TEST_CASE("derived draws") {
    Stream s(3, 9);
    const int n = 400000;
    double e = 0, g = 0, g2 = 0, p = 0;
    std::set<std::uint64_t> seen;
    for (int i = 0; i < n; ++i) {
      e += s.exponential(0.5);
      const double z = s.normal();
      g += z;
      g2 += z * z;
      p += s.poisson(3.0);
      const auto k = s.below(10);
      REQUIRE(k < 10);
      seen.insert(k);
    }
    CHECK(e / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(g / n) < 0.01);
    CHECK(g2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(p / n == doctest::Approx(3.0).epsilon(0.01));
    CHECK(seen.size() == 10);
  }

  TEST_CASE("hash stream is deterministic per key") {
    HashStream a(11), b(11), c(12);
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    const double u = a.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
