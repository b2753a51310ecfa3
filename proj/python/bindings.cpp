// Python bindings over the core operations: market simulation, expert
// quoting rules, policy generation and the benchmark metrics.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "finflow/experts/experts.hpp"
#include "finflow/harness/config.hpp"
#include "finflow/harness/evaluate.hpp"
#include "finflow/harness/metrics.hpp"
#include "finflow/harness/pipeline.hpp"
#include "finflow/harness/scenario.hpp"
#include "finflow/meanflow/checkpoint.hpp"
#include "finflow/noiserl/ppo.hpp"
#include "finflow/sim/fbm.hpp"
#include "finflow/sim/hawkes.hpp"
#include "finflow/sim/simulator.hpp"

namespace py = pybind11;
using namespace finflow;

namespace {

sim::Observation observation_at(long inventory, int step_index,
                                int horizon_steps, double dt, int t_obs) {
  sim::Observation obs;
  obs.window.resize(static_cast<std::size_t>(t_obs));
  obs.inventory = inventory;
  obs.step_index = step_index;
  obs.horizon_steps = horizon_steps;
  obs.dt = dt;
  return obs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "finflow core: market-making simulator, quoting experts, "
            "flow policies and benchmark metrics";

  py::class_<sim::HawkesParams>(m, "HawkesParams")
      .def(py::init<>())
      .def_readwrite("mu_a", &sim::HawkesParams::mu_a)
      .def_readwrite("mu_b", &sim::HawkesParams::mu_b)
      .def_readwrite("alpha_aa", &sim::HawkesParams::alpha_aa)
      .def_readwrite("alpha_ab", &sim::HawkesParams::alpha_ab)
      .def_readwrite("alpha_bb", &sim::HawkesParams::alpha_bb)
      .def_readwrite("alpha_ba", &sim::HawkesParams::alpha_ba)
      .def_readwrite("beta", &sim::HawkesParams::beta)
      .def("branching_spectral_radius",
           &sim::HawkesParams::branching_spectral_radius)
      .def("stationary_rates",
           [](const sim::HawkesParams& h) {
             double ra, rb;
             h.stationary_rates(ra, rb);
             return py::make_tuple(ra, rb);
           })
      .def("validate", &sim::HawkesParams::validate);

  py::class_<sim::MarketParams>(m, "MarketParams")
      .def(py::init<>())
      .def_readwrite("mu", &sim::MarketParams::mu)
      .def_readwrite("sigma", &sim::MarketParams::sigma)
      .def_readwrite("hurst", &sim::MarketParams::hurst)
      .def_readwrite("jump_intensity", &sim::MarketParams::jump_intensity)
      .def_readwrite("jump_mean", &sim::MarketParams::jump_mean)
      .def_readwrite("jump_std", &sim::MarketParams::jump_std)
      .def_readwrite("hawkes", &sim::MarketParams::hawkes)
      .def_readwrite("fill_decay", &sim::MarketParams::fill_decay)
      .def_readwrite("horizon_steps", &sim::MarketParams::horizon_steps)
      .def_readwrite("dt", &sim::MarketParams::dt)
      .def_readwrite("s0", &sim::MarketParams::s0)
      .def_readwrite("inventory_penalty", &sim::MarketParams::inventory_penalty)
      .def_readwrite("inventory_scale", &sim::MarketParams::inventory_scale)
      .def("validate", &sim::MarketParams::validate);

  py::class_<sim::ChunkConfig>(m, "ChunkConfig")
      .def(py::init<>())
      .def_readwrite("t_obs", &sim::ChunkConfig::t_obs)
      .def_readwrite("t_pred", &sim::ChunkConfig::t_pred)
      .def_readwrite("t_exec", &sim::ChunkConfig::t_exec)
      .def("validate", &sim::ChunkConfig::validate);

  py::class_<sim::EpisodeResult>(m, "EpisodeResult")
      .def_readonly("pnl_series", &sim::EpisodeResult::pnl_series)
      .def_readonly("terminal_wealth", &sim::EpisodeResult::terminal_wealth)
      .def_readonly("terminal_inventory",
                    &sim::EpisodeResult::terminal_inventory)
      .def_readonly("objective", &sim::EpisodeResult::objective)
      .def_readonly("bid_fills", &sim::EpisodeResult::bid_fills)
      .def_readonly("ask_fills", &sim::EpisodeResult::ask_fills)
      .def_readonly("seed", &sim::EpisodeResult::seed);

  py::class_<experts::ExpertParams>(m, "ExpertParams")
      .def(py::init<>())
      .def_readwrite("gamma_risk", &experts::ExpertParams::gamma_risk)
      .def_readwrite("fill_scale", &experts::ExpertParams::fill_scale)
      .def_readwrite("drift_estimate", &experts::ExpertParams::drift_estimate)
      .def_readwrite("drift_tau_ref", &experts::ExpertParams::drift_tau_ref)
      .def_readwrite("delta_max", &experts::ExpertParams::delta_max);

  m.def("simulate_fbm", &sim::simulate_fbm, py::arg("hurst"), py::arg("n"),
        py::arg("dt"), py::arg("seed"),
        "Fractional Gaussian noise increments with Var = dt^{2H}.");

  m.def("fgn_autocovariance", &sim::fgn_autocovariance, py::arg("hurst"),
        py::arg("lag"));

  m.def(
      "hawkes_counts",
      [](const sim::HawkesParams& params, double horizon, double dt,
         std::uint64_t seed) {
        sim::HawkesState state;
        Rng rng(seed);
        long buys = 0, sells = 0;
        for (double t = 0.0; t < horizon; t += dt) {
          const auto r = sim::simulate_hawkes_step(state, params, dt, rng);
          buys += r.n_buy;
          sells += r.n_sell;
        }
        return py::make_tuple(buys, sells);
      },
      py::arg("params"), py::arg("horizon"), py::arg("dt"), py::arg("seed"),
      "Total buy/sell arrivals over a horizon.");

  m.def(
      "run_episode",
      [](const std::string& method, const sim::MarketParams& market,
         const sim::ChunkConfig& chunk, std::uint64_t seed,
         const experts::ExpertParams& expert_params) {
        harness::AppConfig cfg;
        cfg.market = market;
        cfg.chunk = chunk;
        cfg.experts = expert_params;
        harness::PolicyBundle bundle;
        auto policy = harness::make_policy(method, market, "", cfg, bundle);
        return sim::run_episode(*policy, market, chunk, seed);
      },
      py::arg("method"), py::arg("market") = sim::MarketParams{},
      py::arg("chunk") = sim::ChunkConfig{}, py::arg("seed") = 1,
      py::arg("expert_params") = experts::ExpertParams{},
      "One seeded episode under a closed-form policy "
      "(random | as | glft | glft_drift).");

  m.def(
      "as_quote",
      [](long inventory, int step_index, const experts::ExpertParams& p,
         const sim::MarketParams& market, const sim::ChunkConfig& chunk) {
        const auto obs = observation_at(inventory, step_index,
                                        market.horizon_steps, market.dt,
                                        chunk.t_obs);
        const auto c = experts::as_quotes(obs, p, market, chunk);
        return py::make_tuple(c.bid(0), c.ask(0));
      },
      py::arg("inventory"), py::arg("step_index") = 0,
      py::arg("expert_params") = experts::ExpertParams{},
      py::arg("market") = sim::MarketParams{},
      py::arg("chunk") = sim::ChunkConfig{});

  m.def(
      "glft_quote",
      [](long inventory, const experts::ExpertParams& p,
         const sim::MarketParams& market, const sim::ChunkConfig& chunk) {
        const auto obs =
            observation_at(inventory, 0, market.horizon_steps, market.dt,
                           chunk.t_obs);
        const auto c = experts::glft_quotes(obs, p, market, chunk);
        return py::make_tuple(c.bid(0), c.ask(0));
      },
      py::arg("inventory"), py::arg("expert_params") = experts::ExpertParams{},
      py::arg("market") = sim::MarketParams{},
      py::arg("chunk") = sim::ChunkConfig{});

  m.def(
      "generate_chunk",
      [](const std::string& meanflow_ckpt, const Eigen::VectorXd& obs_flat,
         std::uint64_t seed) {
        const auto net = meanflow::load_meanflow(meanflow_ckpt);
        Rng rng(seed);
        return Eigen::MatrixXd(
            meanflow::generate(net, obs_flat, rng).spreads);
      },
      py::arg("meanflow_ckpt"), py::arg("obs_flat"), py::arg("seed") = 1,
      "One-step chunk generation from a saved checkpoint.");

  m.def(
      "sharpe_ratio",
      [](const std::vector<double>& returns) {
        return harness::sharpe_ratio(returns);
      },
      py::arg("returns"));

  m.def(
      "max_drawdown",
      [](const std::vector<double>& series) {
        return harness::max_drawdown(series);
      },
      py::arg("series"));

  m.def(
      "paired_one_sided_pvalue",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return harness::paired_one_sided_pvalue(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "evaluate",
      [](const std::string& config_path, const std::string& method,
         const std::string& regime, int trials, std::uint64_t base_seed) {
        const harness::AppConfig cfg = harness::load_config(config_path);
        const harness::PolicyBundle bundle = harness::load_bundle(cfg);
        const harness::RegimeSpec* spec = nullptr;
        for (const auto& r : cfg.regimes)
          if (r.name == regime) spec = &r;
        if (!spec) throw std::invalid_argument("unknown regime: " + regime);
        const auto detail =
            harness::evaluate(method, *spec, trials, base_seed, cfg, bundle);
        py::dict row;
        row["method"] = detail.row.method;
        row["regime"] = detail.row.regime;
        row["trials"] = detail.row.trials;
        row["pnl_mean"] = detail.row.pnl_mean;
        row["pnl_se"] = detail.row.pnl_se;
        row["sharpe"] = detail.row.sharpe;
        row["mdd_mean"] = detail.row.mdd_mean;
        row["objectives"] = detail.objectives;
        return row;
      },
      py::arg("config_path"), py::arg("method"), py::arg("regime"),
      py::arg("trials") = 100, py::arg("base_seed") = 1,
      "Evaluate a registry method in one regime (checkpoint methods require "
      "the artifacts referenced by the config).");

  m.def("default_config_json",
        [] { return harness::config_to_json(harness::AppConfig{}); });
}
