#include <cmath>
#include <string>

#include "doctest.h"
#include "lorentz/config_io.hpp"
#include "lorentz/error.hpp"

using namespace lorentz;

namespace {
void round_trip(const ScattererConfig& c) {
  const Json j = to_json(c);
  const Json k = to_json(scatterer_config_from_json(j));
  CHECK(j == k);
  CHECK(digest(j) == digest(k));
}
}  // namespace

TEST_SUITE("config_io") {
  TEST_CASE("scatterer configs round trip") {
    round_trip(presets::square_lattice());
    round_trip(AffineLatticeSpec{{{{1, 0}, {0.5, 2}}}, {0.1, 0.2}});
    round_trip(PoissonSpec{3, 12345678901234ull, 2.5});
    round_trip(presets::rotated_union({0.25, 0.75}));
    round_trip(presets::honeycomb_union());
    round_trip(presets::honeycomb_delone());
    round_trip(presets::ammann_beenker(true));
    round_trip(FiniteSpec{2, {{0, 0}, {1, 2}}});
  }

  TEST_CASE("maps and models round trip") {
    const ScatteringMap tab = ScatteringMap::tabulated({0, 0.5, 0.9}, {M_PI, 2.0, 0.4});
    const Json j = to_json(tab);
    CHECK(to_json(scattering_map_from_json(j)) == j);
    CHECK(scattering_map_from_json("specular").kind() == ScatteringMap::Kind::specular);
    for (const KernelModel& m : {KernelModel{PoissonKernel{3}}, KernelModel{Lattice2DKernel{}},
                                 KernelModel{UnionKernel{{0.5, 0.5}}}})
      CHECK(to_json(kernel_model_from_json(to_json(m))) == to_json(m));
  }

  TEST_CASE("union densities are normalised") {
    const auto m = kernel_model_from_json(Json{{"kind", "union"}, {"densities", {1, 3}}});
    const auto& u = std::get<UnionKernel>(m);
    CHECK(u.densities[0] == doctest::Approx(0.25));
    CHECK(u.densities[1] == doctest::Approx(0.75));
  }

  TEST_CASE("errors name the field") {
    try {
      scatterer_config_from_json(Json{{"kind", "lattice"}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("basis") != std::string::npos);
    }
    CHECK_THROWS_AS(scatterer_config_from_json(Json{{"kind", "torus"}}), ConfigError);
    CHECK_THROWS_AS(scatterer_config_from_json(Json{{"kind", "lattice"}, {"basis", "x"}}), ConfigError);
    CHECK_THROWS_AS(scattering_map_from_json(Json{{"kind", "lambertian"}}), ConfigError);
    CHECK_THROWS_AS(kernel_model_from_json(Json{{"kind", "union"}, {"densities", {1, -1}}}), ConfigError);
    CHECK_THROWS_AS(kernel_model_from_json("hexagonal"), ConfigError);
  }

  TEST_CASE("digest is stable and content sensitive") {
    const Json a = to_json(presets::square_lattice());
    Json b = a;
    b["basis"][0][0] = 2.0;
    CHECK(digest(a).size() == 16);
    CHECK(digest(a) == digest(to_json(presets::square_lattice())));
    CHECK(digest(a) != digest(b));
  }
}
