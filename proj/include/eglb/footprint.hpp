#ifndef EGLB_FOOTPRINT_HPP
#define EGLB_FOOTPRINT_HPP

#include <stdexcept>
#include <string>

#include "eglb/model.hpp"

namespace eglb {

/// Energy, money, carbon and water consumed by one data center in one
/// step. All fields scale linearly with load under the fluid model.
struct StepFootprint {
  double energy = 0.0;       // kWh
  double energy_cost = 0.0;  // USD
  double carbon = 0.0;       // gCO2
  double water = 0.0;        // L

  StepFootprint& operator+=(const StepFootprint& o) {
    energy += o.energy;
    energy_cost += o.energy_cost;
    carbon += o.carbon;
    water += o.water;
    return *this;
  }
};

namespace detail {

inline void check_step_args(double load, const DataCenterProfile& dc,
                            std::size_t t) {
  if (t >= dc.price.size())
    throw std::out_of_range("step index " + std::to_string(t) +
                            " out of range for dc " + dc.id);
  if (load < 0.0)
    throw std::domain_error("negative load " + std::to_string(load) +
                            " for dc " + dc.id);
}

}  // namespace detail

/// Raw footprint of serving `load` requests at dc during step t.
/// energy = pue * eps * load; everything else is a per-kWh rate times energy.
inline StepFootprint step_footprint(double load, const DataCenterProfile& dc,
                                    std::size_t t, double energy_per_request) {
  detail::check_step_args(load, dc, t);
  StepFootprint f;
  f.energy = dc.pue[t] * energy_per_request * load;
  f.energy_cost = dc.price[t] * f.energy;
  f.carbon = dc.carbon_intensity[t] * f.energy;
  f.water = (dc.wue[t] + dc.ewif[t]) * f.energy;
  return f;
}

/// Dimensionless environmental cost per request served at dc in step t.
/// Carbon and water are normalized by fleet-scale constants so the two
/// are commensurable, then combined with the scenario's env weights.
inline double env_rate(const DataCenterProfile& dc, std::size_t t,
                       const Scenario& scn) {
  if (t >= dc.carbon_intensity.size())
    throw std::out_of_range("step index " + std::to_string(t) +
                            " out of range for dc " + dc.id);
  const double per_kwh =
      scn.env_weights.carbon * dc.carbon_intensity[t] / scn.env_norms.carbon +
      scn.env_weights.water * (dc.wue[t] + dc.ewif[t]) / scn.env_norms.water;
  return dc.pue[t] * scn.energy_per_request * per_kwh;
}

/// E_{i,t}(load): linear, non-negative, non-decreasing in load.
inline double env_cost(double load, const DataCenterProfile& dc, std::size_t t,
                       const Scenario& scn) {
  detail::check_step_args(load, dc, t);
  return env_rate(dc, t, scn) * load;
}

/// USD per request served at dc in step t: electricity plus optional
/// monetized carbon/water (beta weights, zero by default).
inline double cost_rate(const DataCenterProfile& dc, std::size_t t,
                        const Scenario& scn) {
  if (t >= dc.price.size())
    throw std::out_of_range("step index " + std::to_string(t) +
                            " out of range for dc " + dc.id);
  const double per_kwh = dc.price[t] +
                         scn.cost_weights.carbon * dc.carbon_intensity[t] +
                         scn.cost_weights.water * (dc.wue[t] + dc.ewif[t]);
  return dc.pue[t] * scn.energy_per_request * per_kwh;
}

/// cost_{i,t}(load) in USD.
inline double glb_cost(double load, const DataCenterProfile& dc, std::size_t t,
                       const Scenario& scn) {
  detail::check_step_args(load, dc, t);
  return cost_rate(dc, t, scn) * load;
}

}  // namespace eglb

#endif  // EGLB_FOOTPRINT_HPP
