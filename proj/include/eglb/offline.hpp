#ifndef EGLB_OFFLINE_HPP
#define EGLB_OFFLINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eglb/footprint.hpp"
#include "eglb/model.hpp"

namespace eglb {

/// Absolute tolerance for argmax ties in the equity term.
inline constexpr double kTieTol = 1e-9;

struct ObjectiveBreakdown {
  double cost_term = 0.0;    // USD
  double equity_term = 0.0;  // max over regions of cumulative env cost
  double lambda = 0.0;
  double total = 0.0;        // cost_term + lambda * equity_term
  std::vector<std::string> argmax_regions;
};

struct SolverOptions {
  double tol = 1e-6;
  std::size_t max_iters = 10000;
  double step0 = 0.0;  // 0 = auto scale from demand and marginal costs
};

struct SolverReport {
  Allocation allocation;
  ObjectiveBreakdown objective;
  std::size_t iterations = 0;
  bool converged = false;
  double final_step_size = 0.0;
};

/// Raised when no feasible allocation exists for a scenario.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Per-region cumulative env cost over the horizon.
inline std::vector<double> cumulative_env(const Scenario& scn,
                                          const Allocation& alloc) {
  std::vector<double> cum(scn.num_dcs(), 0.0);
  for (std::size_t i = 0; i < scn.num_dcs(); ++i)
    for (std::size_t t = 0; t < scn.horizon; ++t)
      cum[i] += env_rate(scn.datacenters[i], t, scn) * alloc.dc_load(i, t);
  return cum;
}

inline std::vector<std::size_t> argmax_set(const std::vector<double>& v,
                                           double tol) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= top - tol) idx.push_back(i);
  return idx;
}

/// Euclidean projection of v (restricted to the index subset) onto the
/// scaled simplex {y >= 0, sum y = total}; zeroes coordinates outside idx.
inline void simplex_project(std::vector<double>& v, const std::vector<int>& idx,
                            double total) {
  if (total <= 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  std::vector<double> orig;
  orig.reserve(idx.size());
  for (int i : idx) orig.push_back(v[static_cast<std::size_t>(i)]);
  std::vector<double> u = orig;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = -total;  // rho = 0 fallback never triggers for total >= 0
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double th = (cum - total) / static_cast<double>(j + 1);
    if (u[j] - th > 0.0) theta = th;
  }
  std::fill(v.begin(), v.end(), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k)
    v[static_cast<std::size_t>(idx[k])] = std::max(0.0, orig[k] - theta);
}

inline void check_projection_feasible(const Scenario& scn,
                                      const RoutingIndex& routing) {
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    double total_demand = 0.0, total_cap = 0.0;
    for (const auto& src : scn.sources) total_demand += src.demand[t];
    for (const auto& dc : scn.datacenters) total_cap += dc.capacity;
    if (total_demand > total_cap * (1.0 + kFeasibilityRelTol))
      throw InfeasibleError("infeasible at step " + std::to_string(t) +
                            ": total demand " + std::to_string(total_demand) +
                            " exceeds total capacity");
    for (std::size_t s = 0; s < scn.num_sources(); ++s) {
      double cap = 0.0;
      for (int i : routing.allowed_idx[s])
        cap += scn.datacenters[static_cast<std::size_t>(i)].capacity;
      if (scn.sources[s].demand[t] > cap * (1.0 + kFeasibilityRelTol))
        throw InfeasibleError("infeasible at step " + std::to_string(t) +
                              ": source " + scn.sources[s].id + " demand " +
                              std::to_string(scn.sources[s].demand[t]) +
                              " exceeds its allowed capacity");
    }
  }
}

}  // namespace detail

/// Evaluates the equity-aware objective: sum of per-step costs plus
/// lambda times the worst region's cumulative environmental cost.
inline ObjectiveBreakdown evaluate_objective(const Scenario& scn,
                                             const Allocation& alloc,
                                             double lambda,
                                             bool allow_infeasible = false) {
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  if (!alloc.shape_matches(scn))
    throw std::invalid_argument("dimension mismatch in evaluate_objective");
  (void)allow_infeasible;  // objective is defined on the full box

  ObjectiveBreakdown out;
  out.lambda = lambda;
  for (std::size_t i = 0; i < scn.num_dcs(); ++i)
    for (std::size_t t = 0; t < scn.horizon; ++t)
      out.cost_term += cost_rate(scn.datacenters[i], t, scn) * alloc.dc_load(i, t);

  const std::vector<double> cum = detail::cumulative_env(scn, alloc);
  out.equity_term = *std::max_element(cum.begin(), cum.end());
  for (std::size_t i : detail::argmax_set(cum, kTieTol))
    out.argmax_regions.push_back(scn.datacenters[i].id);
  out.total = out.cost_term + lambda * out.equity_term;
  return out;
}

/// Subgradient of the objective with respect to x. The non-smooth max
/// term distributes its subgradient equally over the argmax regions
/// (tie tolerance 1e-9), which damps oscillation at the minimax kink.
inline std::vector<double> objective_subgradient(const Scenario& scn,
                                                 const Allocation& alloc,
                                                 double lambda) {
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  if (!alloc.shape_matches(scn))
    throw std::invalid_argument("dimension mismatch in objective_subgradient");
  const std::size_t T = scn.horizon, S = scn.num_sources(), N = scn.num_dcs();
  const std::vector<double> cum = detail::cumulative_env(scn, alloc);
  const std::vector<std::size_t> top = detail::argmax_set(cum, kTieTol);
  std::vector<double> in_top(N, 0.0);
  for (std::size_t i : top) in_top[i] = 1.0 / static_cast<double>(top.size());

  std::vector<double> g(T * S * N, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      const double gi = cost_rate(scn.datacenters[i], t, scn) +
                        lambda * in_top[i] * env_rate(scn.datacenters[i], t, scn);
      for (std::size_t s = 0; s < S; ++s) g[(t * S + s) * N + i] = gi;
    }
  }
  return g;
}

/// Euclidean projection of a raw tensor onto the feasible transportation
/// polytope, by Dykstra alternation between per-(t,s) simplex projections
/// and per-(t,i) capacity half-spaces. Stops at max violation < 1e-9 or
/// 500 sweeps; the caller can re-check with check_allocation.
inline Allocation project_feasible(const Scenario& scn,
                                   const std::vector<double>& raw) {
  const std::size_t T = scn.horizon, S = scn.num_sources(), N = scn.num_dcs();
  if (raw.size() != T * S * N)
    throw std::invalid_argument("dimension mismatch in project_feasible");
  const RoutingIndex routing = make_routing(scn);
  detail::check_projection_feasible(scn, routing);

  bool any_capacity = false;
  for (const auto& dc : scn.datacenters)
    if (std::isfinite(dc.capacity)) any_capacity = true;

  Allocation out(T, S, N);
  std::vector<double> cell(N);

  if (!any_capacity) {
    // Only the per-(t,s) simplices are active; one exact pass suffices.
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t i = 0; i < N; ++i) cell[i] = raw[(t * S + s) * N + i];
        detail::simplex_project(cell, routing.allowed_idx[s],
                                scn.sources[s].demand[t]);
        for (std::size_t i = 0; i < N; ++i) out.at(t, s, i) = cell[i];
      }
    return out;
  }

  // Dykstra with one correction buffer per constraint family.
  std::vector<double> x = raw;
  std::vector<double> p(x.size(), 0.0), q(x.size(), 0.0);
  const int max_sweeps = 500;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // Family A: per-(t,s) scaled simplices.
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t base = (t * S + s) * N;
        for (std::size_t i = 0; i < N; ++i) cell[i] = x[base + i] + p[base + i];
        std::vector<double> before = cell;
        detail::simplex_project(cell, routing.allowed_idx[s],
                                scn.sources[s].demand[t]);
        for (std::size_t i = 0; i < N; ++i) {
          p[base + i] = before[i] - cell[i];
          x[base + i] = cell[i];
        }
      }
    // Family B: per-(t,i) capacity half-spaces (sum over sources <= cap).
    double max_violation = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < N; ++i) {
        const double cap = scn.datacenters[i].capacity;
        if (!std::isfinite(cap)) continue;
        double sum = 0.0;
        for (std::size_t s = 0; s < S; ++s) sum += x[(t * S + s) * N + i] + q[(t * S + s) * N + i];
        const double excess = sum - cap;
        if (excess > 0.0) {
          const double shift = excess / static_cast<double>(S);
          for (std::size_t s = 0; s < S; ++s) {
            const std::size_t k = (t * S + s) * N + i;
            const double y = x[k] + q[k] - shift;
            q[k] = x[k] + q[k] - y;
            x[k] = y;
          }
        } else {
          for (std::size_t s = 0; s < S; ++s) {
            const std::size_t k = (t * S + s) * N + i;
            x[k] = x[k] + q[k];
            q[k] = 0.0;
          }
        }
      }
    // Convergence: residual violation of both families on the current x.
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t base = (t * S + s) * N;
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          sum += x[base + i];
          max_violation = std::max(max_violation, -x[base + i]);
          if (!routing.allowed[s][i])
            max_violation = std::max(max_violation, std::abs(x[base + i]));
        }
        max_violation =
            std::max(max_violation, std::abs(sum - scn.sources[s].demand[t]));
      }
      for (std::size_t i = 0; i < N; ++i) {
        const double cap = scn.datacenters[i].capacity;
        if (!std::isfinite(cap)) continue;
        double load = 0.0;
        for (std::size_t s = 0; s < S; ++s) load += x[(t * S + s) * N + i];
        max_violation = std::max(max_violation, load - cap);
      }
    }
    if (max_violation < 1e-9) break;
  }
  // Snap residual noise so downstream checks see a clean point.
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < 0.0 && x[k] > -1e-9) x[k] = 0.0;
  out.data() = x;
  return out;
}

namespace detail {

/// Greedy per-step waterfilling by a marginal score; shared with the
/// online policies as the GLB-Cost warm start.
inline Allocation greedy_by_cost(const Scenario& scn) {
  const std::size_t T = scn.horizon, S = scn.num_sources(), N = scn.num_dcs();
  const RoutingIndex routing = make_routing(scn);
  Allocation alloc(T, S, N);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> remaining(N);
    for (std::size_t i = 0; i < N; ++i) remaining[i] = scn.datacenters[i].capacity;
    for (std::size_t s = 0; s < S; ++s) {
      std::vector<int> order = routing.allowed_idx[s];
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ca = cost_rate(scn.datacenters[static_cast<std::size_t>(a)], t, scn);
        const double cb = cost_rate(scn.datacenters[static_cast<std::size_t>(b)], t, scn);
        if (ca != cb) return ca < cb;
        return scn.datacenters[static_cast<std::size_t>(a)].id <
               scn.datacenters[static_cast<std::size_t>(b)].id;
      });
      double left = scn.sources[s].demand[t];
      for (int i : order) {
        if (left <= 0.0) break;
        const std::size_t ui = static_cast<std::size_t>(i);
        const double take = std::min(left, remaining[ui]);
        alloc.at(t, s, ui) += take;
        remaining[ui] -= take;
        left -= take;
      }
      if (left > kFeasibilityRelTol * std::max(1.0, scn.sources[s].demand[t]))
        throw InfeasibleError("infeasible at step " + std::to_string(t) +
                              ": source " + scn.sources[s].id +
                              " cannot place its demand");
    }
  }
  return alloc;
}

}  // namespace detail

/// Solves the full-horizon equity-aware problem by projected subgradient
/// descent from the GLB-Cost warm start, tracking the best feasible point.
/// The step starts at step0 and is halved whenever a round of iterations
/// stops improving, which drives the residual suboptimality to zero for
/// this piecewise-linear objective.
inline SolverReport solve_eglb_off(const Scenario& scn, double lambda,
                                   SolverOptions opts = {}) {
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  {
    auto violations = validate_scenario(scn);
    if (!violations.empty())
      throw std::invalid_argument("invalid scenario: " + violations.front());
  }
  const std::size_t T = scn.horizon, S = scn.num_sources(), N = scn.num_dcs();

  Allocation x;
  try {
    x = detail::greedy_by_cost(scn);
  } catch (const InfeasibleError&) {
    // Greedy source order can dead-end under tight partial topologies;
    // fall back to projecting an even spread.
    std::vector<double> raw(T * S * N, 0.0);
    const RoutingIndex routing = make_routing(scn);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 0; s < S; ++s)
        for (int i : routing.allowed_idx[s])
          raw[(t * S + s) * N + static_cast<std::size_t>(i)] =
              scn.sources[s].demand[t] /
              static_cast<double>(routing.allowed_idx[s].size());
    x = project_feasible(scn, raw);
  }

  SolverReport report;
  report.allocation = x;
  report.objective = evaluate_objective(scn, x, lambda);
  double f_best = report.objective.total;

  double step0 = opts.step0;
  if (step0 <= 0.0) {
    double total_demand = 0.0;
    for (const auto& src : scn.sources)
      total_demand += std::accumulate(src.demand.begin(), src.demand.end(), 0.0);
    double mean_rate = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < N; ++i)
        mean_rate += cost_rate(scn.datacenters[i], t, scn) +
                     lambda * env_rate(scn.datacenters[i], t, scn);
    mean_rate /= static_cast<double>(T * N);
    step0 = mean_rate > 0.0 ? total_demand / (static_cast<double>(T * N) * mean_rate)
                            : 1.0;
    if (step0 <= 0.0) step0 = 1.0;
  }

  double step = step0;
  std::size_t iters = 0;
  const std::size_t round_iters = 150;
  bool converged = false;
  while (iters < opts.max_iters) {
    const double f_round_start = f_best;
    for (std::size_t k = 1; k <= round_iters && iters < opts.max_iters; ++k, ++iters) {
      const std::vector<double> g = objective_subgradient(scn, x, lambda);
      std::vector<double> raw = x.data();
      const double alpha = step / std::sqrt(static_cast<double>(k));
      for (std::size_t j = 0; j < raw.size(); ++j) raw[j] -= alpha * g[j];
      x = project_feasible(scn, raw);
      const ObjectiveBreakdown obj = evaluate_objective(scn, x, lambda);
      if (obj.total < f_best) {
        f_best = obj.total;
        report.allocation = x;
        report.objective = obj;
      }
    }
    const double improvement = f_round_start - f_best;
    if (improvement < opts.tol * std::max(1.0, std::abs(f_best))) {
      if (step < step0 * 1e-10) {
        converged = true;
        break;
      }
      step *= 0.5;
    }
    x = report.allocation;  // restart each round from the incumbent
  }
  report.iterations = iters;
  report.converged = converged;
  report.final_step_size = step;
  return report;
}

/// Exhaustive grid search over the feasible polytope; the independent
/// oracle the solver is tested against. Refuses when the enumeration
/// would exceed 1e7 grid points.
inline std::pair<Allocation, double> brute_force_oracle(const Scenario& scn,
                                                        double lambda,
                                                        double grid_step) {
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  if (!(grid_step > 0.0)) throw std::domain_error("grid_step must be > 0");
  const std::size_t T = scn.horizon, S = scn.num_sources(), N = scn.num_dcs();
  const RoutingIndex routing = make_routing(scn);

  struct Cell {
    std::size_t t, s;
    double demand;
    std::int64_t levels;  // grid levels to distribute over allowed dcs
  };
  std::vector<Cell> cells;
  double log_budget = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      Cell c{t, s, scn.sources[s].demand[t], 0};
      if (c.demand > 0.0)
        c.levels = std::max<std::int64_t>(1, std::llround(c.demand / grid_step));
      cells.push_back(c);
      // count of compositions of `levels` into n parts = C(levels+n-1, n-1)
      const std::int64_t n = static_cast<std::int64_t>(routing.allowed_idx[s].size());
      double count = 1.0;
      for (std::int64_t j = 1; j < n; ++j)
        count *= static_cast<double>(c.levels + j) / static_cast<double>(j);
      log_budget += std::log(std::max(1.0, count));
    }
  if (log_budget > std::log(1e7))
    throw std::domain_error(
        "brute_force_oracle: grid enumeration exceeds the 1e7 point budget");

  Allocation current(T, S, N);
  Allocation best(T, S, N);
  double best_total = std::numeric_limits<double>::infinity();
  bool found = false;

  // Incremental state, updated as mass is placed: running cost term,
  // per-region cumulative env, and per-(t,i) loads for capacity checks.
  std::vector<double> cost_rates(T * N), env_rates(T * N);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i) {
      cost_rates[t * N + i] = cost_rate(scn.datacenters[i], t, scn);
      env_rates[t * N + i] = env_rate(scn.datacenters[i], t, scn);
    }
  double cost_acc = 0.0;
  std::vector<double> env_acc(N, 0.0);
  std::vector<double> load(T * N, 0.0);

  const auto place = [&](std::size_t t, std::size_t s, std::size_t i,
                         double amount) {
    current.at(t, s, i) += amount;
    load[t * N + i] += amount;
    cost_acc += cost_rates[t * N + i] * amount;
    env_acc[i] += env_rates[t * N + i] * amount;
  };

  // Depth-first over cells; within a cell, over compositions of levels.
  std::function<void(std::size_t)> recurse = [&](std::size_t ci) {
    if (ci == cells.size()) {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < N; ++i)
          if (load[t * N + i] >
              scn.datacenters[i].capacity * (1.0 + kFeasibilityRelTol))
            return;
      const double total =
          cost_acc + lambda * *std::max_element(env_acc.begin(), env_acc.end());
      if (total < best_total) {
        best_total = total;
        best = current;
        found = true;
      }
      return;
    }
    const Cell& c = cells[ci];
    const auto& idx = routing.allowed_idx[c.s];
    if (c.demand <= 0.0) {
      recurse(ci + 1);
      return;
    }
    const double unit = c.demand / static_cast<double>(c.levels);
    std::function<void(std::size_t, std::int64_t)> fill =
        [&](std::size_t j, std::int64_t left) {
          const std::size_t i = static_cast<std::size_t>(idx[j]);
          if (j + 1 == idx.size()) {
            const double amount = static_cast<double>(left) * unit;
            place(c.t, c.s, i, amount);
            recurse(ci + 1);
            place(c.t, c.s, i, -amount);
            return;
          }
          for (std::int64_t take = 0; take <= left; ++take) {
            const double amount = static_cast<double>(take) * unit;
            place(c.t, c.s, i, amount);
            fill(j + 1, left - take);
            place(c.t, c.s, i, -amount);
          }
        };
    fill(0, c.levels);
  };
  recurse(0);
  if (!found)
    throw InfeasibleError("brute_force_oracle: no grid point is feasible");
  // Re-evaluate the winner cleanly; the incremental accumulators carry a
  // little add/subtract drift after millions of leaves.
  return {best, evaluate_objective(scn, best, lambda).total};
}

}  // namespace eglb

#endif  // EGLB_OFFLINE_HPP
