#pragma once

#include <string>
#include <vector>

#include "finflow/sim/params.hpp"

namespace finflow::harness {

// Cartesian scenario grid over the training axes. Ordering is lexicographic:
// volatility, then arrival rate, then jump intensity, then any hurst axis.
struct GridConfig {
  std::vector<double> volatility = {0.05, 0.1, 0.3};
  std::vector<double> arrival_rate = {10.0, 20.0, 40.0};
  std::vector<double> jump_intensity = {0.0, 1.0, 3.0};
  std::vector<double> hurst;  // optional extra axis; empty = base market value
};

struct ScenarioDescriptor {
  std::string name;
  sim::MarketParams market;
};

struct ScenarioGrid {
  std::vector<ScenarioDescriptor> scenarios;
  std::size_t size() const { return scenarios.size(); }
};

// Sets the Hawkes baselines so the stationary per-side event rate equals the
// requested arrival rate under the base excitation kernel.
void set_arrival_rate(sim::MarketParams& market, double rate);

ScenarioGrid build_scenario_grid(const GridConfig& grid,
                                 const sim::MarketParams& base);

// Out-of-sample benchmark regime: volatility/arrival-rate combination at
// H = 0.5 and zero drift.
struct RegimeSpec {
  std::string name;
  double sigma = 0.1;
  double arrival_rate = 25.0;
  double hurst = 0.5;
  double drift = 0.0;
};

// HH, HL, LH, LL with sigma in {0.25, 0.02} and arrival rate in {50, 25}.
std::vector<RegimeSpec> default_regimes();

sim::MarketParams regime_market(const RegimeSpec& regime,
                                const sim::MarketParams& base);

}  // namespace finflow::harness
