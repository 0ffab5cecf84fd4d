#ifndef EGLB_SIM_HPP
#define EGLB_SIM_HPP

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eglb/footprint.hpp"
#include "eglb/model.hpp"
#include "eglb/offline.hpp"
#include "eglb/online.hpp"

namespace eglb {

struct ScenarioIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GlbMode { full, partial };

inline const char* to_string(GlbMode m) {
  return m == GlbMode::full ? "full" : "partial";
}

/// Cumulative per-region accounting over a run, with optional per-step
/// history for re-accumulation checks.
struct FootprintLedger {
  std::vector<double> energy;  // kWh per region
  std::vector<double> cost;    // USD
  std::vector<double> carbon;  // g
  std::vector<double> water;   // L
  std::vector<double> env;     // dimensionless
  std::vector<std::vector<StepFootprint>> history;  // [t][i], if retained
  bool retain_history = false;

  explicit FootprintLedger(std::size_t n = 0, bool retain = false)
      : energy(n, 0.0), cost(n, 0.0), carbon(n, 0.0), water(n, 0.0),
        env(n, 0.0), retain_history(retain) {}

  void add_step(const Scenario& scn, std::size_t t,
                const std::vector<double>& dc_loads) {
    std::vector<StepFootprint> row;
    for (std::size_t i = 0; i < dc_loads.size(); ++i) {
      const auto& dc = scn.datacenters[i];
      StepFootprint f = step_footprint(dc_loads[i], dc, t, scn.energy_per_request);
      energy[i] += f.energy;
      cost[i] += f.energy_cost +
                 scn.cost_weights.carbon * f.carbon +
                 scn.cost_weights.water * f.water;
      carbon[i] += f.carbon;
      water[i] += f.water;
      env[i] += env_rate(dc, t, scn) * dc_loads[i];
      if (retain_history) row.push_back(f);
    }
    if (retain_history) history.push_back(std::move(row));
  }
};

/// One Table-style result row.
struct RunResult {
  std::string policy;
  GlbMode mode = GlbMode::full;
  double lambda = 0.0;
  double total_cost = 0.0;
  double par_water = 1.0;
  double par_carbon = 1.0;
  ObjectiveBreakdown objective;
  Allocation allocation;
  double wall_seconds = 0.0;
};

/// Peak-to-average ratio of a per-region total vector; 1.0 for an
/// all-zero fleet by convention.
inline double compute_par(const std::vector<double>& v) {
  if (v.empty()) throw std::domain_error("compute_par: empty vector");
  double sum = 0.0, top = 0.0;
  for (double x : v) {
    if (x < 0.0) throw std::domain_error("compute_par: negative entry");
    sum += x;
    top = std::max(top, x);
  }
  if (sum == 0.0) return 1.0;
  return top / (sum / static_cast<double>(v.size()));
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& file,
                           std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ScenarioIoError(file + ":" + std::to_string(lineno) +
                          ": malformed number '" + s + "'");
  }
}

inline std::size_t parse_index(const std::string& s, const std::string& file,
                               std::size_t lineno) {
  try {
    const long long v = std::stoll(s);
    if (v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ScenarioIoError(file + ":" + std::to_string(lineno) +
                          ": malformed index '" + s + "'");
  }
}

/// Reads a CSV with a header row; hands each data row to `row_fn` with
/// its 1-based line number.
template <typename Fn>
void read_csv(const std::filesystem::path& path, std::size_t min_fields,
              Fn&& row_fn) {
  std::ifstream in(path);
  if (!in) throw ScenarioIoError("missing or unreadable file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() < min_fields)
      throw ScenarioIoError(path.string() + ":" + std::to_string(lineno) +
                            ": expected " + std::to_string(min_fields) +
                            " fields, got " + std::to_string(fields.size()));
    row_fn(fields, lineno);
  }
}

/// Locale-independent fixed formatting, 6 significant digits.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

/// Loads a scenario directory (datacenters.csv, traces.csv, demand.csv,
/// topology.csv, config) and validates it.
inline Scenario load_scenario(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw ScenarioIoError("scenario directory not found: " + dir.string());

  Scenario scn;
  std::map<std::string, std::size_t> dc_idx;

  detail::read_csv(dir / "datacenters.csv", 1, [&](const auto& f, std::size_t ln) {
    DataCenterProfile dc;
    dc.id = f[0];
    if (f.size() >= 2 && !f[1].empty())
      dc.capacity = detail::parse_double(f[1], "datacenters.csv", ln);
    if (dc_idx.count(dc.id))
      throw ScenarioIoError("datacenters.csv:" + std::to_string(ln) +
                            ": duplicate dc_id " + dc.id);
    dc_idx[dc.id] = scn.datacenters.size();
    scn.datacenters.push_back(std::move(dc));
  });

  // traces.csv determines the horizon; rows must be 0-based contiguous in t.
  std::size_t max_t = 0;
  std::vector<std::vector<char>> seen(scn.datacenters.size());
  detail::read_csv(dir / "traces.csv", 7, [&](const auto& f, std::size_t ln) {
    const std::size_t t = detail::parse_index(f[0], "traces.csv", ln);
    auto it = dc_idx.find(f[1]);
    if (it == dc_idx.end())
      throw ScenarioIoError("traces.csv:" + std::to_string(ln) +
                            ": unknown dc_id " + f[1]);
    auto& dc = scn.datacenters[it->second];
    if (t >= dc.price.size()) {
      dc.price.resize(t + 1, -1.0);
      dc.carbon_intensity.resize(t + 1, -1.0);
      dc.wue.resize(t + 1, -1.0);
      dc.ewif.resize(t + 1, -1.0);
      dc.pue.resize(t + 1, 0.0);
      seen[it->second].resize(t + 1, 0);
    }
    if (seen[it->second][t])
      throw ScenarioIoError("traces.csv:" + std::to_string(ln) +
                            ": duplicate (t, dc_id) row");
    seen[it->second][t] = 1;
    dc.price[t] = detail::parse_double(f[2], "traces.csv", ln);
    dc.carbon_intensity[t] = detail::parse_double(f[3], "traces.csv", ln);
    dc.wue[t] = detail::parse_double(f[4], "traces.csv", ln);
    dc.ewif[t] = detail::parse_double(f[5], "traces.csv", ln);
    dc.pue[t] = detail::parse_double(f[6], "traces.csv", ln);
    max_t = std::max(max_t, t);
  });
  scn.horizon = max_t + 1;
  for (std::size_t i = 0; i < scn.datacenters.size(); ++i) {
    if (seen[i].size() != scn.horizon ||
        std::count(seen[i].begin(), seen[i].end(), 1) !=
            static_cast<long>(scn.horizon))
      throw ScenarioIoError("traces.csv: dc " + scn.datacenters[i].id +
                            " does not cover t = 0.." +
                            std::to_string(scn.horizon - 1));
  }

  std::map<std::string, std::size_t> src_idx;
  detail::read_csv(dir / "demand.csv", 3, [&](const auto& f, std::size_t ln) {
    const std::size_t t = detail::parse_index(f[0], "demand.csv", ln);
    if (t >= scn.horizon)
      throw ScenarioIoError("demand.csv:" + std::to_string(ln) + ": t=" +
                            std::to_string(t) + " outside horizon " +
                            std::to_string(scn.horizon) + " (inconsistent T)");
    auto it = src_idx.find(f[1]);
    if (it == src_idx.end()) {
      it = src_idx.emplace(f[1], scn.sources.size()).first;
      SourceProfile src;
      src.id = f[1];
      src.demand.assign(scn.horizon, 0.0);
      scn.sources.push_back(std::move(src));
    }
    scn.sources[it->second].demand[t] =
        detail::parse_double(f[2], "demand.csv", ln);
  });

  detail::read_csv(dir / "topology.csv", 3, [&](const auto& f, std::size_t ln) {
    auto it = src_idx.find(f[0]);
    if (it == src_idx.end())
      throw ScenarioIoError("topology.csv:" + std::to_string(ln) +
                            ": unknown source_id " + f[0]);
    auto& src = scn.sources[it->second];
    src.allowed.push_back(f[1]);
    src.distance[f[1]] = detail::parse_double(f[2], "topology.csv", ln);
  });

  // config: key=value lines, '#' comments.
  {
    const auto path = dir / "config";
    std::ifstream in(path);
    if (!in) throw ScenarioIoError("missing or unreadable file: " + path.string());
    std::map<std::string, double> kv;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ScenarioIoError("config:" + std::to_string(ln) +
                              ": expected key=value");
      std::string key = line.substr(0, eq);
      key.erase(0, key.find_first_not_of(" \t"));
      key.erase(key.find_last_not_of(" \t") + 1);
      std::string val = line.substr(eq + 1);
      val.erase(0, val.find_first_not_of(" \t"));
      val.erase(val.find_last_not_of(" \t") + 1);
      kv[key] = detail::parse_double(val, "config", ln);
    }
    auto get = [&](const char* k, double dflt) {
      auto it = kv.find(k);
      return it == kv.end() ? dflt : it->second;
    };
    scn.energy_per_request = get("energy_per_request_kwh", 0.0);
    scn.env_weights.carbon = get("w_carbon", 0.5);
    scn.env_weights.water = get("w_water", 0.5);
    scn.cost_weights.carbon = get("beta_carbon_usd_per_g", 0.0);
    scn.cost_weights.water = get("beta_water_usd_per_l", 0.0);
    // norm defaults: fleet time-average carbon intensity and water factor.
    double mean_ci = 0.0, mean_w = 0.0;
    std::size_t count = 0;
    for (const auto& dc : scn.datacenters)
      for (std::size_t t = 0; t < scn.horizon; ++t) {
        mean_ci += dc.carbon_intensity[t];
        mean_w += dc.wue[t] + dc.ewif[t];
        ++count;
      }
    if (count > 0) {
      mean_ci /= static_cast<double>(count);
      mean_w /= static_cast<double>(count);
    }
    scn.env_norms.carbon = get("norm_carbon", mean_ci > 0 ? mean_ci : 1.0);
    scn.env_norms.water = get("norm_water", mean_w > 0 ? mean_w : 1.0);
  }

  auto violations = validate_scenario(scn);
  if (!violations.empty()) {
    std::string msg = "scenario validation failed:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ScenarioIoError(msg);
  }
  return scn;
}

/// Rewrites the topology to all (source, dc) pairs; distances already
/// given are kept, the rest default to 0 km.
inline Scenario with_full_topology(const Scenario& scn) {
  Scenario out = scn;
  for (auto& src : out.sources) {
    src.allowed.clear();
    for (const auto& dc : out.datacenters) {
      src.allowed.push_back(dc.id);
      if (!src.distance.count(dc.id)) src.distance[dc.id] = 0.0;
    }
  }
  return out;
}

namespace detail {

inline RunResult measure_run(const Scenario& scn, const Allocation& alloc,
                             const std::string& policy, GlbMode mode,
                             double lambda) {
  FootprintLedger ledger(scn.num_dcs());
  std::vector<double> loads(scn.num_dcs());
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    for (std::size_t i = 0; i < scn.num_dcs(); ++i) loads[i] = alloc.dc_load(i, t);
    ledger.add_step(scn, t, loads);
  }
  RunResult r;
  r.policy = policy;
  r.mode = mode;
  r.lambda = lambda;
  for (double c : ledger.cost) r.total_cost += c;
  r.par_water = compute_par(ledger.water);
  r.par_carbon = compute_par(ledger.carbon);
  r.objective = evaluate_objective(scn, alloc, lambda);
  r.allocation = alloc;
  return r;
}

}  // namespace detail

/// Drives one policy over the horizon and reports Table-style metrics.
/// "eglb-off" runs the offline solver and replays its allocation through
/// the same measurement path as the causal policies.
inline RunResult run_simulation(const Scenario& scenario,
                                const std::string& policy, double lambda,
                                double eta, GlbMode mode,
                                SolverOptions opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario scn =
      mode == GlbMode::full ? with_full_topology(scenario) : scenario;
  {
    auto violations = validate_scenario(scn);
    if (!violations.empty())
      throw std::invalid_argument("invalid scenario: " + violations.front());
  }

  Allocation alloc(scn.horizon, scn.num_sources(), scn.num_dcs());
  if (policy == "eglb-off") {
    alloc = solve_eglb_off(scn, lambda, opts).allocation;
  } else {
    PolicyState st = init_policy(policy_kind_from_string(policy), scn, lambda, eta);
    for (std::size_t t = 0; t < scn.horizon; ++t) {
      const std::vector<double> slice =
          policy_step(st, make_observation(scn, t), scn);
      for (std::size_t s = 0; s < scn.num_sources(); ++s)
        for (std::size_t i = 0; i < scn.num_dcs(); ++i)
          alloc.at(t, s, i) = slice[s * scn.num_dcs() + i];
    }
  }

  RunResult r = detail::measure_run(scn, alloc, policy, mode, lambda);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return r;
}

inline const std::vector<std::string>& table_policy_order() {
  static const std::vector<std::string> order = {"glb-cost", "glb-carbon",
                                                 "glb-dist", "eglb-off", "eglb"};
  return order;
}

/// Plain-text comparison table with deltas against the first row.
inline std::string summarize(const std::vector<RunResult>& results) {
  if (results.empty()) throw std::invalid_argument("summarize: no results");
  std::ostringstream os;
  os << "policy      mode     lambda   cost_usd     par_water  par_carbon\n";
  const RunResult& base = results.front();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const RunResult& r = results[k];
    char line[256];
    std::snprintf(line, sizeof(line), "%-11s %-8s %-8s %-12s %-10s %-10s",
                  r.policy.c_str(), to_string(r.mode),
                  detail::fmt(r.lambda).c_str(), detail::fmt(r.total_cost).c_str(),
                  detail::fmt(r.par_water).c_str(),
                  detail::fmt(r.par_carbon).c_str());
    os << line;
    if (k > 0 && results.size() > 1) {
      const double dc = base.total_cost != 0.0
                            ? 100.0 * (r.total_cost - base.total_cost) / base.total_cost
                            : 0.0;
      os << "  cost " << (dc >= 0 ? "+" : "") << detail::fmt(dc) << "%"
         << ", par_w " << detail::fmt(r.par_water - base.par_water)
         << ", par_c " << detail::fmt(r.par_carbon - base.par_carbon);
    }
    os << "\n";
  }
  return os.str();
}

inline void write_results_csv(const std::filesystem::path& path,
                              const std::vector<RunResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioIoError("cannot write " + path.string());
  out << "policy,mode,lambda,total_cost_usd,par_water,par_carbon,equity_term,"
         "cost_term\n";
  for (const auto& r : results)
    out << r.policy << ',' << to_string(r.mode) << ',' << detail::fmt(r.lambda)
        << ',' << detail::fmt(r.total_cost) << ',' << detail::fmt(r.par_water)
        << ',' << detail::fmt(r.par_carbon) << ','
        << detail::fmt(r.objective.equity_term) << ','
        << detail::fmt(r.objective.cost_term) << '\n';
}

inline void write_allocation_csv(const std::filesystem::path& path,
                                 const Scenario& scn, const Allocation& alloc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioIoError("cannot write " + path.string());
  out << "t,source_id,dc_id,requests\n";
  for (std::size_t t = 0; t < alloc.horizon(); ++t)
    for (std::size_t s = 0; s < alloc.num_sources(); ++s)
      for (std::size_t i = 0; i < alloc.num_dcs(); ++i)
        out << t << ',' << scn.sources[s].id << ',' << scn.datacenters[i].id
            << ',' << detail::fmt(alloc.at(t, s, i)) << '\n';
}

}  // namespace eglb

#endif  // EGLB_SIM_HPP
