#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "eglb/footprint.hpp"
#include "support.hpp"

using namespace eglb;

TEST_CASE("step_footprint is a direct product of rates") {
  DataCenterProfile dc;
  dc.id = "a";
  dc.price = {0.10};
  dc.carbon_intensity = {500.0};
  dc.wue = {1.8};
  dc.ewif = {0.0};
  dc.pue = {1.2};
  StepFootprint f = step_footprint(100.0, dc, 0, 0.004);
  CHECK(f.energy == doctest::Approx(0.48).epsilon(1e-12));
  CHECK(f.energy_cost == doctest::Approx(0.048).epsilon(1e-12));
  CHECK(f.carbon == doctest::Approx(240.0).epsilon(1e-12));
  CHECK(f.water == doctest::Approx(0.864).epsilon(1e-12));

  SUBCASE("zero load gives an all-zero footprint") {
    f = step_footprint(0.0, dc, 0, 0.004);
    CHECK(f.energy == 0.0);
    CHECK(f.energy_cost == 0.0);
    CHECK(f.carbon == 0.0);
    CHECK(f.water == 0.0);
  }
  SUBCASE("out-of-range step throws") {
    CHECK_THROWS_AS(step_footprint(1.0, dc, 1, 0.004), std::out_of_range);
  }
  SUBCASE("negative load throws") {
    CHECK_THROWS_AS(step_footprint(-1.0, dc, 0, 0.004), std::domain_error);
  }
}

TEST_CASE("toy instance footprints") {
  Scenario scn = testing::toy2();
  StepFootprint f = step_footprint(10.0, scn.datacenters[0], 0, 1.0);
  CHECK(f.energy == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(f.energy_cost == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.carbon == doctest::Approx(5000.0).epsilon(1e-12));
  CHECK(f.water == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("env_cost matches the hand-evaluated normalized weighted sum") {
  Scenario scn = testing::toy2();
  // DC1: 0.5*(500/300) + 0.5*(2.0/1.5) = 1.5 per request
  CHECK(env_cost(1.0, scn.datacenters[0], 0, scn) ==
        doctest::Approx(1.5).epsilon(1e-12));
  // DC2: 0.5*(100/300) + 0.5*(1.0/1.5) = 0.5 per request
  CHECK(env_cost(1.0, scn.datacenters[1], 0, scn) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(env_cost(0.0, scn.datacenters[0], 0, scn) == 0.0);
}

TEST_CASE("glb_cost with and without monetized carbon") {
  Scenario scn = testing::toy2();
  CHECK(glb_cost(10.0, scn.datacenters[0], 0, scn) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(glb_cost(10.0, scn.datacenters[1], 0, scn) ==
        doctest::Approx(2.0).epsilon(1e-12));
  scn.cost_weights.carbon = 1e-4;
  // 1.00 + 1e-4 * 5000 g = 1.50
  CHECK(glb_cost(10.0, scn.datacenters[0], 0, scn) ==
        doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("env_cost and glb_cost are 1-homogeneous and monotone in load") {
  Scenario scn = testing::toy2();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> load(0.0, 50.0), scale(0.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const double x = load(rng), a = scale(rng);
    for (const auto& dc : scn.datacenters) {
      CHECK(env_cost(a * x, dc, 0, scn) ==
            doctest::Approx(a * env_cost(x, dc, 0, scn)).epsilon(1e-12));
      CHECK(glb_cost(a * x, dc, 0, scn) ==
            doctest::Approx(a * glb_cost(x, dc, 0, scn)).epsilon(1e-12));
      CHECK(env_cost(x + 1.0, dc, 0, scn) >= env_cost(x, dc, 0, scn));
      CHECK(glb_cost(x + 1.0, dc, 0, scn) >= glb_cost(x, dc, 0, scn));
    }
  }
}

TEST_CASE("degenerate env weights reduce to a single footprint") {
  Scenario scn = testing::toy2();
  scn.env_weights = {1.0, 0.0};
  const auto& dc = scn.datacenters[0];
  // proportional to carbon: rate = CI / norm_carbon
  CHECK(env_cost(3.0, dc, 0, scn) ==
        doctest::Approx(3.0 * 500.0 / 300.0).epsilon(1e-12));
  scn.env_weights = {0.0, 1.0};
  CHECK(env_cost(3.0, dc, 0, scn) ==
        doctest::Approx(3.0 * 2.0 / 1.5).epsilon(1e-12));
}

TEST_CASE("additivity: accumulated step footprints match one total") {
  Scenario scn = testing::toy2();
  StepFootprint total;
  double direct_energy = 0.0;
  for (std::size_t t = 0; t < scn.horizon; ++t)
    for (const auto& dc : scn.datacenters) {
      total += step_footprint(7.0, dc, t, scn.energy_per_request);
      direct_energy += dc.pue[t] * scn.energy_per_request * 7.0;
    }
  CHECK(total.energy == doctest::Approx(direct_energy).epsilon(1e-12));
}
