#ifndef EGLB_MODEL_HPP
#define EGLB_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace eglb {

/// Sentinel for data centers with no request-rate limit.
inline constexpr double kUnboundedCapacity =
    std::numeric_limits<double>::infinity();

/// Relative tolerance for conservation/capacity checks. Accumulated
/// floating-point error from repeated projections stays below this.
inline constexpr double kFeasibilityRelTol = 1e-9;

struct DataCenterProfile {
  std::string id;
  double capacity = kUnboundedCapacity;  // requests per step
  // Per-step series, each of length T.
  std::vector<double> price;             // USD/kWh
  std::vector<double> carbon_intensity;  // gCO2/kWh
  std::vector<double> wue;               // L/kWh, on-site water
  std::vector<double> ewif;              // L/kWh, off-site (electricity) water
  std::vector<double> pue;               // dimensionless, >= 1
};

struct SourceProfile {
  std::string id;
  std::vector<double> demand;        // requests per step, length T
  std::vector<std::string> allowed;  // routable data-center ids, non-empty
  std::unordered_map<std::string, double> distance;  // dc id -> km
};

struct EnvWeights {
  double carbon = 0.5;
  double water = 0.5;
};

struct CostWeights {
  double carbon = 0.0;  // USD per gCO2
  double water = 0.0;   // USD per L
};

struct EnvNorms {
  double carbon = 1.0;  // gCO2/kWh
  double water = 1.0;   // L/kWh
};

/// Immutable world description shared by every solver and policy.
/// Treat as read-only after construction; safe to share across threads.
struct Scenario {
  std::vector<DataCenterProfile> datacenters;
  std::vector<SourceProfile> sources;
  std::size_t horizon = 0;          // T
  double energy_per_request = 0.0;  // kWh per request, > 0
  EnvWeights env_weights;
  CostWeights cost_weights;
  EnvNorms env_norms;

  std::size_t num_dcs() const { return datacenters.size(); }
  std::size_t num_sources() const { return sources.size(); }

  /// Index of a data center by id, or -1 if unknown.
  int dc_index(const std::string& id) const {
    for (std::size_t i = 0; i < datacenters.size(); ++i)
      if (datacenters[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

/// Resolved routing topology: per-source allowed masks and distances by
/// data-center index. Built once per solve from a validated Scenario.
struct RoutingIndex {
  std::vector<std::vector<char>> allowed;      // [s][i] -> 0/1
  std::vector<std::vector<double>> distance;   // [s][i], NaN if disallowed
  std::vector<std::vector<int>> allowed_idx;   // [s] -> sorted dc indices
};

inline RoutingIndex make_routing(const Scenario& scn) {
  RoutingIndex r;
  const std::size_t n = scn.num_dcs();
  r.allowed.assign(scn.num_sources(), std::vector<char>(n, 0));
  r.distance.assign(scn.num_sources(),
                    std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  r.allowed_idx.resize(scn.num_sources());
  for (std::size_t s = 0; s < scn.num_sources(); ++s) {
    for (const auto& id : scn.sources[s].allowed) {
      int i = scn.dc_index(id);
      if (i < 0) continue;  // validate_scenario reports this
      r.allowed[s][static_cast<std::size_t>(i)] = 1;
      auto it = scn.sources[s].distance.find(id);
      if (it != scn.sources[s].distance.end())
        r.distance[s][static_cast<std::size_t>(i)] = it->second;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (r.allowed[s][i]) r.allowed_idx[s].push_back(static_cast<int>(i));
  }
  return r;
}

/// Decision variable: requests routed from each source to each data center
/// at each step. Dense (T, S, N) tensor; the per-dc load of the equity
/// objective is recovered by aggregation over sources.
class Allocation {
 public:
  Allocation() = default;
  Allocation(std::size_t t, std::size_t s, std::size_t n)
      : t_(t), s_(s), n_(n), x_(t * s * n, 0.0) {}

  std::size_t horizon() const { return t_; }
  std::size_t num_sources() const { return s_; }
  std::size_t num_dcs() const { return n_; }

  double at(std::size_t t, std::size_t s, std::size_t i) const {
    return x_[(t * s_ + s) * n_ + i];
  }
  double& at(std::size_t t, std::size_t s, std::size_t i) {
    return x_[(t * s_ + s) * n_ + i];
  }

  /// Aggregate load on data center i at step t.
  double dc_load(std::size_t i, std::size_t t) const {
    double sum = 0.0;
    for (std::size_t s = 0; s < s_; ++s) sum += at(t, s, i);
    return sum;
  }

  std::vector<double>& data() { return x_; }
  const std::vector<double>& data() const { return x_; }

  bool shape_matches(const Scenario& scn) const {
    return t_ == scn.horizon && s_ == scn.num_sources() && n_ == scn.num_dcs();
  }

 private:
  std::size_t t_ = 0, s_ = 0, n_ = 0;
  std::vector<double> x_;
};

namespace detail {

inline std::string fmt_violation(const std::string& where,
                                 const std::string& what) {
  return where + ": " + what;
}

inline void check_series(std::vector<std::string>& out, const std::string& who,
                         const std::string& field,
                         const std::vector<double>& series, std::size_t horizon,
                         double lower) {
  if (series.size() != horizon) {
    std::ostringstream os;
    os << field << " has length " << series.size() << ", expected horizon "
       << horizon;
    out.push_back(fmt_violation(who, os.str()));
    return;
  }
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (!(series[t] >= lower) || !std::isfinite(series[t])) {
      std::ostringstream os;
      os << field << "[" << t << "] = " << series[t] << " violates " << field
         << " >= " << lower;
      out.push_back(fmt_violation(who, os.str()));
    }
  }
}

}  // namespace detail

/// Checks every Scenario invariant and returns one description per
/// violation. Empty result means the scenario is well formed.
inline std::vector<std::string> validate_scenario(const Scenario& scn) {
  std::vector<std::string> v;
  if (scn.datacenters.empty()) v.push_back("scenario: no data centers");
  if (scn.sources.empty()) v.push_back("scenario: no sources");
  if (scn.horizon < 1) v.push_back("scenario: horizon must be >= 1");
  if (!(scn.energy_per_request > 0))
    v.push_back("scenario: energy_per_request must be > 0");
  if (!(scn.env_weights.carbon >= 0) || !(scn.env_weights.water >= 0))
    v.push_back("scenario: env_weights must be >= 0");
  else if (!(scn.env_weights.carbon + scn.env_weights.water > 0))
    v.push_back("scenario: env_weights must not both be zero");
  if (!(scn.cost_weights.carbon >= 0) || !(scn.cost_weights.water >= 0))
    v.push_back("scenario: cost_weights must be >= 0");
  if (!(scn.env_norms.carbon > 0) || !(scn.env_norms.water > 0))
    v.push_back("scenario: env_norms must be > 0");

  std::unordered_map<std::string, int> seen;
  for (std::size_t i = 0; i < scn.datacenters.size(); ++i) {
    const auto& dc = scn.datacenters[i];
    const std::string who = "datacenters[" + std::to_string(i) + "] (" + dc.id + ")";
    if (++seen[dc.id] > 1) v.push_back(detail::fmt_violation(who, "duplicate id"));
    if (!(dc.capacity >= 0))
      v.push_back(detail::fmt_violation(who, "capacity must be >= 0"));
    detail::check_series(v, who, "price", dc.price, scn.horizon, 0.0);
    detail::check_series(v, who, "carbon_intensity", dc.carbon_intensity,
                         scn.horizon, 0.0);
    detail::check_series(v, who, "wue", dc.wue, scn.horizon, 0.0);
    detail::check_series(v, who, "ewif", dc.ewif, scn.horizon, 0.0);
    detail::check_series(v, who, "pue", dc.pue, scn.horizon, 1.0);
  }
  seen.clear();
  for (std::size_t s = 0; s < scn.sources.size(); ++s) {
    const auto& src = scn.sources[s];
    const std::string who = "sources[" + std::to_string(s) + "] (" + src.id + ")";
    if (++seen[src.id] > 1) v.push_back(detail::fmt_violation(who, "duplicate id"));
    detail::check_series(v, who, "demand", src.demand, scn.horizon, 0.0);
    if (src.allowed.empty())
      v.push_back(detail::fmt_violation(who, "allowed set is empty"));
    for (const auto& id : src.allowed) {
      if (scn.dc_index(id) < 0)
        v.push_back(detail::fmt_violation(who, "allowed references unknown dc '" + id + "'"));
      else if (!src.distance.count(id))
        v.push_back(detail::fmt_violation(who, "no distance for allowed dc '" + id + "'"));
    }
    for (const auto& [id, km] : src.distance) {
      if (scn.dc_index(id) < 0)
        v.push_back(detail::fmt_violation(who, "distance references unknown dc '" + id + "'"));
      if (!(km >= 0))
        v.push_back(detail::fmt_violation(who, "distance to '" + id + "' must be >= 0"));
    }
  }

  // Aggregate per-step feasibility.
  if (scn.horizon >= 1) {
    double total_cap = 0.0;
    for (const auto& dc : scn.datacenters) total_cap += dc.capacity;
    for (std::size_t t = 0; t < scn.horizon; ++t) {
      double total_demand = 0.0;
      for (const auto& src : scn.sources)
        if (t < src.demand.size()) total_demand += src.demand[t];
      if (total_demand > total_cap * (1.0 + kFeasibilityRelTol)) {
        std::ostringstream os;
        os << "scenario: step " << t << " total demand " << total_demand
           << " exceeds total capacity " << total_cap;
        v.push_back(os.str());
      }
    }
  }
  return v;
}

/// Reports conservation, non-negativity, allowed-set, and capacity
/// violations of an allocation against its scenario. Throws on shape
/// mismatch; violations themselves are data, not failures.
inline std::vector<std::string> check_allocation(const Scenario& scn,
                                                 const Allocation& alloc) {
  if (!alloc.shape_matches(scn)) {
    std::ostringstream os;
    os << "dimension mismatch: expected (T,S,N)=(" << scn.horizon << ","
       << scn.num_sources() << "," << scn.num_dcs() << ") got ("
       << alloc.horizon() << "," << alloc.num_sources() << ","
       << alloc.num_dcs() << ")";
    throw std::invalid_argument(os.str());
  }
  std::vector<std::string> v;
  const RoutingIndex routing = make_routing(scn);
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    for (std::size_t s = 0; s < scn.num_sources(); ++s) {
      double row_sum = 0.0;
      for (std::size_t i = 0; i < scn.num_dcs(); ++i) {
        const double val = alloc.at(t, s, i);
        row_sum += val;
        std::ostringstream where;
        where << "x[" << t << "," << scn.sources[s].id << ","
              << scn.datacenters[i].id << "]";
        if (val < 0.0)
          v.push_back(where.str() + " = " + std::to_string(val) + " is negative");
        if (!routing.allowed[s][i] && val > 0.0)
          v.push_back(where.str() + " routes " + std::to_string(val) +
                      " to a disallowed dc");
      }
      const double demand = scn.sources[s].demand[t];
      const double tol = kFeasibilityRelTol * std::max(1.0, demand);
      if (std::abs(row_sum - demand) > tol) {
        std::ostringstream os;
        os << "conservation at (t=" << t << ", source=" << scn.sources[s].id
           << "): allocated " << row_sum << " vs demand " << demand
           << " (magnitude " << std::abs(row_sum - demand) << ")";
        v.push_back(os.str());
      }
    }
    for (std::size_t i = 0; i < scn.num_dcs(); ++i) {
      const double cap = scn.datacenters[i].capacity;
      const double load = alloc.dc_load(i, t);
      if (load > cap * (1.0 + kFeasibilityRelTol)) {
        std::ostringstream os;
        os << "capacity at (t=" << t << ", dc=" << scn.datacenters[i].id
           << "): load " << load << " exceeds capacity " << cap
           << " (magnitude " << load - cap << ")";
        v.push_back(os.str());
      }
    }
  }
  return v;
}

}  // namespace eglb

#endif  // EGLB_MODEL_HPP
