#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <tuple>

#include "eglb/offline.hpp"
#include "support.hpp"

using namespace eglb;

// ---------------------------------------------------------------------------
// evaluate_objective

TEST_CASE("toy objective, all load on dc1") {
  Scenario scn = testing::toy2();
  Allocation all_dc1 = testing::toy2_split(scn, 10.0);

  ObjectiveBreakdown o = evaluate_objective(scn, all_dc1, 0.0);
  CHECK(o.cost_term == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(o.equity_term == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(o.total == doctest::Approx(2.0).epsilon(1e-12));

  o = evaluate_objective(scn, all_dc1, 1.0);
  CHECK(o.total == doctest::Approx(32.0).epsilon(1e-12));
  REQUIRE(o.argmax_regions.size() == 1);
  CHECK(o.argmax_regions[0] == "dc1");
}

TEST_CASE("toy objective at the balanced optimum a=5") {
  Scenario scn = testing::toy2();
  // 5 to dc1 and 15 to dc2 over the horizon (2.5 / 7.5 per step)
  Allocation split = testing::toy2_split(scn, 2.5);
  ObjectiveBreakdown o = evaluate_objective(scn, split, 1.0);
  CHECK(o.cost_term == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(o.equity_term == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(o.total == doctest::Approx(11.0).epsilon(1e-12));
  REQUIRE(o.argmax_regions.size() == 2);  // exact tie at the kink
}

TEST_CASE("total = cost + lambda * equity, and lambda < 0 throws") {
  Scenario scn = testing::toy2();
  Allocation alloc = testing::toy2_split(scn, 7.0);
  ObjectiveBreakdown o = evaluate_objective(scn, alloc, 2.5);
  CHECK(o.total ==
        doctest::Approx(o.cost_term + 2.5 * o.equity_term).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate_objective(scn, alloc, -1.0), std::domain_error);
}

// ---------------------------------------------------------------------------
// objective_subgradient

TEST_CASE("subgradient at a unique argmax") {
  Scenario scn = testing::toy2();
  Allocation all_dc1 = testing::toy2_split(scn, 10.0);
  const double lambda = 1.0;
  auto g = objective_subgradient(scn, all_dc1, lambda);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(g[t * 2 + 0] == doctest::Approx(0.10 + lambda * 1.5).epsilon(1e-12));
    CHECK(g[t * 2 + 1] == doctest::Approx(0.20).epsilon(1e-12));
  }
}

TEST_CASE("lambda=0 subgradient is the pure cost gradient") {
  Scenario scn = testing::toy2();
  auto g = objective_subgradient(scn, testing::toy2_split(scn, 3.0), 0.0);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(g[t * 2 + 0] == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(g[t * 2 + 1] == doctest::Approx(0.20).epsilon(1e-12));
  }
}

TEST_CASE("argmax tie splits the equity subgradient equally") {
  Scenario scn = testing::toy2();
  const double lambda = 1.0;
  auto g = objective_subgradient(scn, testing::toy2_split(scn, 2.5), lambda);
  CHECK(g[0] == doctest::Approx(0.10 + lambda * 1.5 / 2.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.20 + lambda * 0.5 / 2.0).epsilon(1e-12));
}

TEST_CASE("subgradient matches central finite differences away from ties") {
  Scenario scn = testing::toy2();
  const double lambda = 0.7, h = 1e-5;
  Allocation alloc = testing::toy2_split(scn, 8.0);  // env gap well above 1e-3
  auto g = objective_subgradient(scn, alloc, lambda);
  for (std::size_t k = 0; k < alloc.data().size(); ++k) {
    Allocation up = alloc, dn = alloc;
    up.data()[k] += h;
    dn.data()[k] -= h;
    const double fd = (evaluate_objective(scn, up, lambda, true).total -
                       evaluate_objective(scn, dn, lambda, true).total) /
                      (2.0 * h);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4));
  }
}

// ---------------------------------------------------------------------------
// project_feasible

TEST_CASE("projection leaves feasible points unchanged") {
  Scenario scn = testing::toy2();
  Allocation alloc = testing::toy2_split(scn, 6.5);
  Allocation proj = project_feasible(scn, alloc.data());
  for (std::size_t k = 0; k < alloc.data().size(); ++k)
    CHECK(proj.data()[k] == doctest::Approx(alloc.data()[k]).epsilon(1e-12));
}

TEST_CASE("simplex projection of (20, 10) onto demand 10 is (10, 0)") {
  Scenario scn = testing::toy2();
  std::vector<double> raw = {20.0, 10.0, 5.0, 5.0};
  Allocation proj = project_feasible(scn, raw);
  CHECK(proj.at(0, 0, 0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(proj.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(proj.at(1, 0, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("negative raw with a single allowed dc lands all mass there") {
  Scenario scn = testing::toy2();
  scn.sources[0].allowed = {"dc2"};
  scn.sources[0].distance.erase("dc1");
  std::vector<double> raw = {-3.0, -5.0, -1.0, -2.0};
  Allocation proj = project_feasible(scn, raw);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(proj.at(t, 0, 0) == 0.0);
    CHECK(proj.at(t, 0, 1) == doctest::Approx(10.0).epsilon(1e-12));
  }
  CHECK(check_allocation(scn, proj).empty());
}

TEST_CASE("Dykstra projection respects binding capacities") {
  Scenario scn = testing::toy2();
  scn.datacenters[0].capacity = 4.0;
  std::vector<double> raw = {20.0, 0.0, 20.0, 0.0};
  Allocation proj = project_feasible(scn, raw);
  CHECK(check_allocation(scn, proj).empty());
  for (std::size_t t = 0; t < 2; ++t)
    CHECK(proj.dc_load(0, t) <= doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("projection of an infeasible scenario names the step") {
  Scenario scn = testing::toy2();
  scn.datacenters[0].capacity = 3.0;
  scn.datacenters[1].capacity = 3.0;
  CHECK_THROWS_WITH_AS(project_feasible(scn, std::vector<double>(4, 0.0)),
                       doctest::Contains("step 0"), InfeasibleError);
}

// ---------------------------------------------------------------------------
// solve_eglb_off

TEST_CASE("toy solve: lambda=0 routes everything to the cheap dc") {
  Scenario scn = testing::toy2();
  SolverReport r = solve_eglb_off(scn, 0.0);
  CHECK(r.objective.total == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(check_allocation(scn, r.allocation).empty());
}

TEST_CASE("toy solve: lambda=1 finds the minimax kink") {
  Scenario scn = testing::toy2();
  SolverReport r = solve_eglb_off(scn, 1.0);
  CHECK(r.objective.total == doctest::Approx(11.0).epsilon(1e-4));
  CHECK(check_allocation(scn, r.allocation).empty());
  double a = 0.0;
  for (std::size_t t = 0; t < 2; ++t) a += r.allocation.at(t, 0, 0);
  CHECK(a == doctest::Approx(5.0).epsilon(1e-2));
}

TEST_CASE("toy solve: small lambda keeps the cost term dominant") {
  Scenario scn = testing::toy2();
  SolverReport r = solve_eglb_off(scn, 0.05);
  CHECK(r.objective.total == doctest::Approx(3.5).epsilon(1e-4));
}

TEST_CASE("solver rejects bad inputs") {
  Scenario scn = testing::toy2();
  CHECK_THROWS_AS(solve_eglb_off(scn, -0.5), std::domain_error);
  scn.datacenters[0].capacity = 1.0;
  scn.datacenters[1].capacity = 1.0;
  CHECK_THROWS_AS(solve_eglb_off(scn, 1.0), std::invalid_argument);
}

TEST_CASE("solver is deterministic") {
  Scenario scn = testing::toy2();
  SolverReport a = solve_eglb_off(scn, 0.8);
  SolverReport b = solve_eglb_off(scn, 0.8);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective.total == b.objective.total);
  CHECK(a.allocation.data() == b.allocation.data());
}

// ---------------------------------------------------------------------------
// brute_force_oracle

TEST_CASE("oracle on the toy instance") {
  Scenario scn = testing::toy2();
  auto [alloc1, total1] = brute_force_oracle(scn, 1.0, 0.5);
  CHECK(total1 == doctest::Approx(11.0).epsilon(1e-12));
  double a = 0.0;
  for (std::size_t t = 0; t < 2; ++t) a += alloc1.at(t, 0, 0);
  CHECK(a == doctest::Approx(5.0).epsilon(1e-12));

  auto [alloc0, total0] = brute_force_oracle(scn, 0.0, 1.0);
  CHECK(total0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(alloc0.dc_load(0, 0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("oracle with one dc returns the unique feasible point") {
  Scenario scn = testing::toy2();
  scn.datacenters.pop_back();
  scn.sources[0].allowed = {"dc1"};
  scn.sources[0].distance.erase("dc2");
  auto [alloc, total] = brute_force_oracle(scn, 3.0, 1.0);
  CHECK(alloc.dc_load(0, 0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(total == evaluate_objective(scn, alloc, 3.0).total);
}

TEST_CASE("oracle refuses combinatorial blowups") {
  Scenario scn = testing::toy2();
  CHECK_THROWS_WITH_AS(brute_force_oracle(scn, 1.0, 1e-4),
                       doctest::Contains("budget"), std::domain_error);
}

// ---------------------------------------------------------------------------
// properties

namespace {

// Worst-case objective change from moving one grid cell of mass, used as
// the Lipschitz slack of the grid oracle.
double grid_slack(const Scenario& scn, double lambda, double grid_step) {
  double max_rate = 0.0;
  for (std::size_t t = 0; t < scn.horizon; ++t)
    for (const auto& dc : scn.datacenters)
      max_rate = std::max(max_rate, cost_rate(dc, t, scn) +
                                        lambda * env_rate(dc, t, scn));
  const double cells =
      static_cast<double>(scn.horizon * scn.num_sources());
  const double n = static_cast<double>(scn.num_dcs());
  return cells * 2.0 * n * grid_step * max_rate;
}

// Coarsens the grid until the enumeration fits the oracle's budget.
std::tuple<Allocation, double, double> oracle_adaptive(const Scenario& scn,
                                                       double lambda,
                                                       double grid) {
  for (;; grid *= 2.0) {
    try {
      auto [alloc, total] = brute_force_oracle(scn, lambda, grid);
      return {alloc, total, grid};
    } catch (const std::domain_error&) {
      if (grid > 1e6) throw;
    }
  }
}

}  // namespace

TEST_CASE("solver agrees with the grid oracle on random small instances") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    Scenario scn = testing::random_small_scenario(rng);
    std::uniform_real_distribution<double> lam(0.0, 2.0);
    const double lambda = lam(rng);
    auto [oracle_alloc, oracle_total, grid] = oracle_adaptive(scn, lambda, 0.25);
    SolverReport r = solve_eglb_off(scn, lambda);
    CHECK(std::abs(r.objective.total - oracle_total) <=
          grid_slack(scn, lambda, grid) + 1e-3);
    // The solver may not exceed the oracle by more than its own tolerance.
    CHECK(r.objective.total <= oracle_total + 1e-3);
    CHECK(check_allocation(scn, r.allocation).empty());
  }
}

TEST_CASE("scalarization: equity falls and cost rises with lambda") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Scenario scn = testing::random_small_scenario(rng);
    double prev_cost = -1e18, prev_equity = 1e18;
    for (double lambda : {0.0, 0.5, 2.0, 8.0}) {
      auto [alloc, total, grid] = oracle_adaptive(scn, lambda, 0.25);
      ObjectiveBreakdown o = evaluate_objective(scn, alloc, lambda);
      CHECK(o.equity_term <= prev_equity + 1e-6);
      CHECK(o.cost_term >= prev_cost - 1e-6);
      prev_cost = o.cost_term;
      prev_equity = o.equity_term;
    }
  }
}

TEST_CASE("lambda=0 solve matches the offline cost optimum") {
  std::mt19937 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    Scenario scn = testing::random_small_scenario(rng);
    SolverReport r = solve_eglb_off(scn, 0.0);
    // With no coupling, per-(t,s) cheapest-dc routing is optimal.
    double best = 0.0;
    for (std::size_t t = 0; t < scn.horizon; ++t)
      for (std::size_t s = 0; s < scn.num_sources(); ++s) {
        double rate = std::numeric_limits<double>::infinity();
        for (const auto& dc : scn.datacenters)
          rate = std::min(rate, cost_rate(dc, t, scn));
        best += rate * scn.sources[s].demand[t];
      }
    CHECK(r.objective.total ==
          doctest::Approx(best).epsilon(1e-6));
  }
}
