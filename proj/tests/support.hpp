#ifndef EGLB_TESTS_SUPPORT_HPP
#define EGLB_TESTS_SUPPORT_HPP

#include <random>
#include <vector>

#include "eglb/model.hpp"

namespace eglb::testing {

/// The 2-DC toy instance used across the suites: T=2, one source with
/// demand 10 per step, unit energy per request, pue 1. DC1 is cheap and
/// dirty (price .10, CI 500, WUE 2), DC2 expensive and clean (price .20,
/// CI 100, WUE 1). Norms 300 / 1.5, env weights .5/.5.
inline Scenario toy2() {
  Scenario scn;
  scn.horizon = 2;
  scn.energy_per_request = 1.0;
  scn.env_weights = {0.5, 0.5};
  scn.cost_weights = {0.0, 0.0};
  scn.env_norms = {300.0, 1.5};

  DataCenterProfile dc1;
  dc1.id = "dc1";
  dc1.price = {0.10, 0.10};
  dc1.carbon_intensity = {500.0, 500.0};
  dc1.wue = {2.0, 2.0};
  dc1.ewif = {0.0, 0.0};
  dc1.pue = {1.0, 1.0};
  DataCenterProfile dc2;
  dc2.id = "dc2";
  dc2.price = {0.20, 0.20};
  dc2.carbon_intensity = {100.0, 100.0};
  dc2.wue = {1.0, 1.0};
  dc2.ewif = {0.0, 0.0};
  dc2.pue = {1.0, 1.0};
  scn.datacenters = {dc1, dc2};

  SourceProfile src;
  src.id = "s1";
  src.demand = {10.0, 10.0};
  src.allowed = {"dc1", "dc2"};
  src.distance = {{"dc1", 800.0}, {"dc2", 50.0}};
  scn.sources = {src};
  return scn;
}

/// Allocation placing `a` of each step's demand on dc1 and the rest on dc2.
inline Allocation toy2_split(const Scenario& scn, double a_per_step) {
  Allocation alloc(scn.horizon, 1, 2);
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    alloc.at(t, 0, 0) = a_per_step;
    alloc.at(t, 0, 1) = scn.sources[0].demand[t] - a_per_step;
  }
  return alloc;
}

/// Seeded random small instance for oracle-equivalence tests. Capacities
/// are left unbounded so grid rounding stays feasible.
inline Scenario random_small_scenario(std::mt19937& rng,
                                      bool restrict_topology = false) {
  std::uniform_int_distribution<int> n_dist(1, 3), s_dist(1, 2), t_dist(1, 3);
  std::uniform_real_distribution<double> price(0.02, 0.30), ci(50.0, 700.0),
      wue(0.2, 9.0), pue(1.0, 1.6), demand(1.0, 3.0), km(10.0, 2000.0);
  const int N = n_dist(rng), S = s_dist(rng), T = t_dist(rng);

  Scenario scn;
  scn.horizon = static_cast<std::size_t>(T);
  scn.energy_per_request = 0.01;
  scn.env_weights = {0.5, 0.5};
  scn.env_norms = {300.0, 3.0};
  for (int i = 0; i < N; ++i) {
    DataCenterProfile dc;
    dc.id = "dc" + std::to_string(i);
    for (int t = 0; t < T; ++t) {
      dc.price.push_back(price(rng));
      dc.carbon_intensity.push_back(ci(rng));
      dc.wue.push_back(wue(rng));
      dc.ewif.push_back(0.0);
      dc.pue.push_back(pue(rng));
    }
    scn.datacenters.push_back(std::move(dc));
  }
  for (int s = 0; s < S; ++s) {
    SourceProfile src;
    src.id = "s" + std::to_string(s);
    for (int t = 0; t < T; ++t) src.demand.push_back(demand(rng));
    for (int i = 0; i < N; ++i) {
      if (restrict_topology && N > 1 && i == (s % N)) continue;
      src.allowed.push_back(scn.datacenters[static_cast<std::size_t>(i)].id);
      src.distance[src.allowed.back()] = km(rng);
    }
    scn.sources.push_back(std::move(src));
  }
  return scn;
}

}  // namespace eglb::testing

#endif  // EGLB_TESTS_SUPPORT_HPP
