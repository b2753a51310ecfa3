#include "finflow/harness/scenario.hpp"

#include <cstdio>
#include <stdexcept>

namespace finflow::harness {

void set_arrival_rate(sim::MarketParams& market, double rate) {
  if (!(rate >= 0.0))
    throw std::invalid_argument("scenario: arrival rate must be >= 0");
  const auto& h = market.hawkes;
  // Solve mu = (I - alpha/beta) lambda with lambda = (rate, rate).
  const double mu_a = rate * (1.0 - (h.alpha_aa + h.alpha_ab) / h.beta);
  const double mu_b = rate * (1.0 - (h.alpha_bb + h.alpha_ba) / h.beta);
  if (mu_a < 0.0 || mu_b < 0.0)
    throw std::invalid_argument(
        "scenario: excitation too strong for the requested arrival rate");
  market.hawkes.mu_a = mu_a;
  market.hawkes.mu_b = mu_b;
}

namespace {
std::string axis_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}
}  // namespace

ScenarioGrid build_scenario_grid(const GridConfig& grid,
                                 const sim::MarketParams& base) {
  if (grid.volatility.empty() || grid.arrival_rate.empty() ||
      grid.jump_intensity.empty())
    throw std::invalid_argument("scenario grid: empty axis");
  const std::vector<double> hurst_axis =
      grid.hurst.empty() ? std::vector<double>{base.hurst} : grid.hurst;

  ScenarioGrid out;
  for (double vol : grid.volatility)
    for (double rate : grid.arrival_rate)
      for (double jump : grid.jump_intensity)
        for (double hurst : hurst_axis) {
          ScenarioDescriptor d;
          d.market = base;
          d.market.sigma = vol;
          d.market.jump_intensity = jump;
          d.market.hurst = hurst;
          set_arrival_rate(d.market, rate);
          d.name = "v" + axis_value(vol) + "_a" + axis_value(rate) + "_j" +
                   axis_value(jump);
          if (hurst_axis.size() > 1 || !grid.hurst.empty())
            d.name += "_h" + axis_value(hurst);
          d.market.validate();
          out.scenarios.push_back(std::move(d));
        }
  return out;
}

std::vector<RegimeSpec> default_regimes() {
  return {
      {"HH", 0.25, 50.0, 0.5, 0.0},
      {"HL", 0.25, 25.0, 0.5, 0.0},
      {"LH", 0.02, 50.0, 0.5, 0.0},
      {"LL", 0.02, 25.0, 0.5, 0.0},
  };
}

sim::MarketParams regime_market(const RegimeSpec& regime,
                                const sim::MarketParams& base) {
  sim::MarketParams m = base;
  m.sigma = regime.sigma;
  m.hurst = regime.hurst;
  m.mu = regime.drift;
  set_arrival_rate(m, regime.arrival_rate);
  m.validate();
  return m;
}

}  // namespace finflow::harness
