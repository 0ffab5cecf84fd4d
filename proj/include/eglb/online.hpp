#ifndef EGLB_ONLINE_HPP
#define EGLB_ONLINE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "eglb/footprint.hpp"
#include "eglb/model.hpp"
#include "eglb/offline.hpp"

namespace eglb {

enum class PolicyKind { eglb, glb_cost, glb_carbon, glb_dist };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::eglb: return "eglb";
    case PolicyKind::glb_cost: return "glb-cost";
    case PolicyKind::glb_carbon: return "glb-carbon";
    case PolicyKind::glb_dist: return "glb-dist";
  }
  return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "eglb") return PolicyKind::eglb;
  if (s == "glb-cost") return PolicyKind::glb_cost;
  if (s == "glb-carbon") return PolicyKind::glb_carbon;
  if (s == "glb-dist") return PolicyKind::glb_dist;
  throw std::invalid_argument("unknown policy kind '" + s + "'");
}

/// Everything a causal policy may see at step t. Carries no information
/// about later steps.
struct StepObservation {
  std::size_t t = 0;
  std::vector<double> demand;            // per source
  std::vector<double> price;             // per dc
  std::vector<double> carbon_intensity;  // per dc
  std::vector<double> wue;               // per dc
  std::vector<double> ewif;              // per dc
  std::vector<double> pue;               // per dc
};

inline StepObservation make_observation(const Scenario& scn, std::size_t t) {
  StepObservation obs;
  obs.t = t;
  for (const auto& src : scn.sources) obs.demand.push_back(src.demand[t]);
  for (const auto& dc : scn.datacenters) {
    obs.price.push_back(dc.price[t]);
    obs.carbon_intensity.push_back(dc.carbon_intensity[t]);
    obs.wue.push_back(dc.wue[t]);
    obs.ewif.push_back(dc.ewif[t]);
    obs.pue.push_back(dc.pue[t]);
  }
  return obs;
}

/// Per-run policy memory. For eglb this carries the dual vector on the
/// lambda-scaled simplex; every policy carries cumulative env ledgers
/// and the step counter.
struct PolicyState {
  PolicyKind kind = PolicyKind::glb_cost;
  double lambda = 0.0;
  double eta = 0.0;       // fixed step size if > 0, else auto-scaled
  std::vector<double> mu;  // duals, eglb only; sum = lambda
  std::vector<double> cumulative_env;  // per region
  std::size_t step = 0;
  double sum_step_max_env = 0.0;  // running estimate feeding the auto eta
};

/// Entropic (multiplicative-weights) ascent step on the lambda-scaled
/// simplex, overflow-safe via max subtraction, renormalized exactly.
inline std::vector<double> mirror_descent_update(const std::vector<double>& mu,
                                                 double lambda, double eta,
                                                 const std::vector<double>& e) {
  if (mu.size() != e.size())
    throw std::invalid_argument("dimension mismatch in mirror_descent_update");
  if (lambda == 0.0) return std::vector<double>(mu.size(), 0.0);
  if (!(eta > 0.0)) throw std::domain_error("eta must be > 0");
  double mass = 0.0;
  for (double m : mu) mass += m;
  if (mass <= 0.0)
    throw std::domain_error("degenerate dual state: all-zero mu with lambda > 0");
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i)
    if (mu[i] > 0.0) m = std::max(m, eta * e[i]);
  std::vector<double> out(mu.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out[i] = mu[i] * std::exp(eta * e[i] - m);
    z += out[i];
  }
  for (double& o : out) o *= lambda / z;
  return out;
}

inline PolicyState init_policy(PolicyKind kind, const Scenario& scn,
                               double lambda, double eta = 0.0) {
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  PolicyState st;
  st.kind = kind;
  st.lambda = lambda;
  st.eta = eta;
  st.cumulative_env.assign(scn.num_dcs(), 0.0);
  if (kind == PolicyKind::eglb) {
    if (eta < 0.0) throw std::domain_error("eta must be >= 0");
    st.mu.assign(scn.num_dcs(), lambda / static_cast<double>(scn.num_dcs()));
  }
  return st;
}

namespace detail {

inline double marginal_score(PolicyKind kind, const PolicyState& st,
                             const StepObservation& obs, const Scenario& scn,
                             const RoutingIndex& routing, std::size_t s,
                             std::size_t i) {
  const double eps = scn.energy_per_request;
  const double energy = obs.pue[i] * eps;  // kWh per request
  switch (kind) {
    case PolicyKind::glb_cost:
      return energy * (obs.price[i] +
                       scn.cost_weights.carbon * obs.carbon_intensity[i] +
                       scn.cost_weights.water * (obs.wue[i] + obs.ewif[i]));
    case PolicyKind::glb_carbon:
      return energy * obs.carbon_intensity[i];
    case PolicyKind::glb_dist:
      return routing.distance[s][i];
    case PolicyKind::eglb: {
      const double cost =
          energy * (obs.price[i] +
                    scn.cost_weights.carbon * obs.carbon_intensity[i] +
                    scn.cost_weights.water * (obs.wue[i] + obs.ewif[i]));
      const double env =
          energy * (scn.env_weights.carbon * obs.carbon_intensity[i] /
                        scn.env_norms.carbon +
                    scn.env_weights.water * (obs.wue[i] + obs.ewif[i]) /
                        scn.env_norms.water);
      return cost + st.mu[i] * env;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Runs one causal step: splits each source's demand by greedy
/// marginal-score waterfilling over its allowed data centers (ties by
/// lexicographic dc id), then advances ledgers and, for eglb, the duals.
/// Returns the (S, N) step slice.
inline std::vector<double> policy_step(PolicyState& state,
                                       const StepObservation& obs,
                                       const Scenario& scn) {
  if (obs.t != state.step)
    throw std::invalid_argument("observation step " + std::to_string(obs.t) +
                                " does not match policy step " +
                                std::to_string(state.step));
  const std::size_t S = scn.num_sources(), N = scn.num_dcs();
  const RoutingIndex routing = make_routing(scn);
  std::vector<double> slice(S * N, 0.0);
  std::vector<double> remaining(N);
  for (std::size_t i = 0; i < N; ++i) remaining[i] = scn.datacenters[i].capacity;

  for (std::size_t s = 0; s < S; ++s) {
    std::vector<int> order = routing.allowed_idx[s];
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = detail::marginal_score(state.kind, state, obs, scn,
                                               routing, s, static_cast<std::size_t>(a));
      const double sb = detail::marginal_score(state.kind, state, obs, scn,
                                               routing, s, static_cast<std::size_t>(b));
      if (sa != sb) return sa < sb;
      return scn.datacenters[static_cast<std::size_t>(a)].id <
             scn.datacenters[static_cast<std::size_t>(b)].id;
    });
    double left = obs.demand[s];
    for (int i : order) {
      if (left <= 0.0) break;
      const std::size_t ui = static_cast<std::size_t>(i);
      const double take = std::min(left, remaining[ui]);
      slice[s * N + ui] += take;
      remaining[ui] -= take;
      left -= take;
    }
    if (left > kFeasibilityRelTol * std::max(1.0, obs.demand[s]))
      throw InfeasibleError("infeasible at (t=" + std::to_string(obs.t) +
                            ", source=" + scn.sources[s].id +
                            "): demand exceeds remaining allowed capacity");
  }

  // Observed per-region env costs for this step.
  std::vector<double> step_env(N, 0.0);
  double step_max_env = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double load = 0.0;
    for (std::size_t s = 0; s < S; ++s) load += slice[s * N + i];
    step_env[i] = env_rate(scn.datacenters[i], obs.t, scn) * load;
    state.cumulative_env[i] += step_env[i];
    step_max_env = std::max(step_max_env, step_env[i]);
  }

  if (state.kind == PolicyKind::eglb && state.lambda > 0.0) {
    state.sum_step_max_env += step_max_env;
    double eta = state.eta;
    if (!(eta > 0.0)) {
      // No-regret scaling from a running estimate of the step env scale.
      const double mean_max =
          state.sum_step_max_env / static_cast<double>(state.step + 1);
      eta = mean_max > 0.0
                ? std::sqrt(std::log(static_cast<double>(N)) /
                            static_cast<double>(scn.horizon)) /
                      mean_max
                : 0.0;
    }
    if (eta > 0.0)
      state.mu = mirror_descent_update(state.mu, state.lambda, eta, step_env);
  }
  state.step += 1;
  return slice;
}

}  // namespace eglb

#endif  // EGLB_ONLINE_HPP
