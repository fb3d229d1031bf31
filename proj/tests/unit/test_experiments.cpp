#include <set>
#include <string>

#include "doctest.h"
#include "lorentz/error.hpp"
#include "lorentz/experiments.hpp"

using namespace lorentz;

namespace {
std::string run_dump(const ExperimentSpec& s, int threads) {
  RunOptions opt;
  opt.threads = threads;
  opt.write_files = false;
  return run(s, opt).to_json().dump();
}
}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("one preset per criterion") {
    std::set<int> crit;
    std::set<std::string> names;
    for (const auto& s : experiment_presets()) {
      crit.insert(s.criterion);
      names.insert(s.name);
    }
    for (int c = 1; c <= 11; ++c) CHECK(crit.count(c) == 1);
    CHECK(names.size() == experiment_presets().size());
    CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
  }

  TEST_CASE("specs round trip through json") {
    for (const auto& s : experiment_presets()) {
      const auto j = to_json(s);
      const auto back = experiment_spec_from_json(j);
      CHECK(to_json(back) == j);
      CHECK(spec_digest(back) == spec_digest(s));
    }
  }

  TEST_CASE("digest ignores the output directory only") {
    auto a = preset("poisson-freepath");
    auto b = a;
    b.out_dir = "/elsewhere";
    CHECK(spec_digest(a) == spec_digest(b));
    b.seed += 1;
    CHECK(spec_digest(a) != spec_digest(b));
  }

  TEST_CASE("invalid specs are rejected") {
    auto j = to_json(preset("kernel-golden"));
    auto bad = j;
    bad["procedure"] = "no_such_procedure";
    CHECK_THROWS_AS(experiment_spec_from_json(bad), ConfigError);
    bad = j;
    bad["unexpected"] = 1;
    CHECK_THROWS_AS(experiment_spec_from_json(bad), ConfigError);
    bad = j;
    bad["tolerances"]["abs"] = "small";
    CHECK_THROWS_AS(experiment_spec_from_json(bad), ConfigError);
  }

  TEST_CASE("reports do not depend on the thread count") {
    auto st = preset("stationarity");
    st.params["samples"] = 20000;
    st.params["steps"] = 5;
    st.limit->paths = 20000;
    st.limit->times = {50.0};
    CHECK(run_dump(st, 1) == run_dump(st, 3));

    auto pf = preset("poisson-freepath");
    pf.micro->flights = 20000;
    pf.limit->paths = 10000;
    pf.limit->times = {10.0, 20.0, 50.0};
    CHECK(run_dump(pf, 1) == run_dump(pf, 2));
  }

  TEST_CASE("cheap presets pass") {
    for (const char* name : {"kernel-golden", "kernel-symmetry-bounds", "lattice-tail-analytic"}) {
      RunOptions opt;
      opt.write_files = false;
      CHECK(run(preset(name), opt).pass());
    }
  }
}
