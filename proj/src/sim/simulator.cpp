#include "finflow/sim/simulator.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "finflow/sim/fbm.hpp"
#include "finflow/sim/hawkes.hpp"

namespace finflow::sim {

double step_price(double s_prev, const MarketParams& params, double db,
                  const std::optional<double>& jump_log_size) {
  if (!(s_prev > 0.0)) throw std::invalid_argument("step_price: s_prev must be > 0");
  double s = s_prev * (1.0 + params.mu * params.dt + params.sigma * db);
  if (jump_log_size) s *= std::exp(*jump_log_size);
  return std::max(s, params.price_floor());
}

std::pair<long, long> apply_fills(double bid_spread, double ask_spread,
                                  int n_buy, int n_sell,
                                  const MarketParams& params, Rng& rng) {
  if (bid_spread < 0.0 || ask_spread < 0.0)
    throw std::invalid_argument("apply_fills: spreads must be >= 0");
  const double p_ask = std::exp(-params.fill_decay * ask_spread);
  const double p_bid = std::exp(-params.fill_decay * bid_spread);
  long ask_fills = 0, bid_fills = 0;
  for (int i = 0; i < n_buy; ++i)
    if (rng.uniform() < p_ask) ++ask_fills;
  for (int i = 0; i < n_sell; ++i)
    if (rng.uniform() < p_bid) ++bid_fills;
  return {bid_fills, ask_fills};
}

void settle_fills(double& cash, long& inventory, double mid, double bid_spread,
                  double ask_spread, long bid_fills, long ask_fills) {
  cash -= bid_fills * (mid - bid_spread);
  cash += ask_fills * (mid + ask_spread);
  inventory += bid_fills - ask_fills;
}

double inventory_penalty(const MarketParams& params, double terminal_inventory) {
  return params.inventory_penalty * terminal_inventory * terminal_inventory;
}

namespace {

Observation make_observation(const std::deque<StepFeatures>& window,
                             long inventory, int step_index,
                             const MarketParams& params) {
  Observation obs;
  obs.window.assign(window.begin(), window.end());
  obs.inventory = inventory;
  obs.step_index = step_index;
  obs.horizon_steps = params.horizon_steps;
  obs.dt = params.dt;
  return obs;
}

}  // namespace

EpisodeResult run_episode(ChunkPolicy& policy, const MarketParams& params,
                          const ChunkConfig& chunk_cfg, EpisodeSeeds seeds,
                          EpisodeTrace* trace) {
  params.validate();
  chunk_cfg.validate();

  const int total_steps = params.horizon_steps;
  Rng jump_rng(derive_seed(seeds.market, {kStreamJump}));
  Rng hawkes_rng(derive_seed(seeds.market, {kStreamHawkes}));
  Rng fill_rng(derive_seed(seeds.market, {kStreamFill}));
  Rng policy_rng(seeds.policy);
  const std::vector<double> db = simulate_fbm(
      params.hurst, total_steps, params.dt, derive_seed(seeds.market, {kStreamFbm}));

  HawkesState hstate;
  double mid = params.s0;
  double cash = 0.0;
  long inventory = 0;

  EpisodeResult result;
  result.seed = seeds.market;
  result.pnl_series.reserve(total_steps + 1);
  result.pnl_series.push_back(0.0);

  if (trace) {
    *trace = EpisodeTrace{};
    trace->mid.push_back(mid);
    trace->inventory.push_back(0.0);
    trace->wealth.push_back(0.0);
  }

  // Pre-start window: flat price, empty book history, baseline intensities.
  std::deque<StepFeatures> window;
  for (int k = 0; k < chunk_cfg.t_obs; ++k) {
    StepFeatures f;
    f.norm_time_left = 1.0;
    f.buy_intensity = params.hawkes.mu_a * params.dt;
    f.sell_intensity = params.hawkes.mu_b * params.dt;
    window.push_back(f);
  }

  ActionChunk chunk;
  int chunk_row = 0;
  double running_penalty = 0.0;

  for (int t = 0; t < total_steps; ++t) {
    if (t % chunk_cfg.t_exec == 0) {
      const Observation obs = make_observation(window, inventory, t, params);
      chunk = policy.plan(obs, policy_rng);
      if (chunk.rows() != chunk_cfg.t_pred || chunk.spreads.cols() != 2)
        throw std::runtime_error("run_episode: policy '" + policy.name() +
                                 "' returned a chunk of wrong shape");
      if (!chunk.spreads.allFinite())
        throw std::runtime_error("run_episode: policy '" + policy.name() +
                                 "' returned non-finite spreads");
      chunk_row = 0;
    }
    const double bid_spread = std::max(0.0, chunk.bid(chunk_row));
    const double ask_spread = std::max(0.0, chunk.ask(chunk_row));
    ++chunk_row;

    const HawkesStepResult arrivals =
        simulate_hawkes_step(hstate, params.hawkes, params.dt, hawkes_rng);
    const auto [bid_fills, ask_fills] =
        apply_fills(bid_spread, ask_spread, arrivals.n_buy, arrivals.n_sell,
                    params, fill_rng);
    settle_fills(cash, inventory, mid, bid_spread, ask_spread, bid_fills,
                 ask_fills);
    result.bid_fills += bid_fills;
    result.ask_fills += ask_fills;

    std::optional<double> jump;
    if (jump_rng.uniform() < params.jump_intensity * params.dt)
      jump = params.jump_mean + params.jump_std * jump_rng.normal();
    const double mid_next = step_price(mid, params, db[t], jump);

    const double wealth_prev = result.pnl_series.back();
    const double wealth = cash + inventory * mid_next;
    result.pnl_series.push_back(wealth);

    const double step_penalty =
        params.inventory_penalty * params.dt * static_cast<double>(inventory) *
        static_cast<double>(inventory);
    running_penalty += step_penalty;
    double reward = (wealth - wealth_prev) - step_penalty;
    if (t == total_steps - 1) {
      // Terminal adjustment: refund the running penalty and charge the
      // terminal one, so rewards sum exactly to W_T - phi(I_T).
      reward += running_penalty - inventory_penalty(params, inventory);
    }

    auto [lambda_a, lambda_b] =
        hawkes_intensities(hstate, params.hawkes, hstate.last_update);
    StepFeatures f;
    f.log_return = std::log(mid_next / mid);
    f.norm_inventory = inventory / params.inventory_scale;
    f.norm_time_left = static_cast<double>(total_steps - t - 1) / total_steps;
    f.buy_intensity = lambda_a * params.dt;
    f.sell_intensity = lambda_b * params.dt;
    f.bid_fill = bid_fills > 0 ? 1.0 : 0.0;
    f.ask_fill = ask_fills > 0 ? 1.0 : 0.0;
    window.pop_front();
    window.push_back(f);

    if (trace) {
      trace->mid.push_back(mid_next);
      trace->inventory.push_back(static_cast<double>(inventory));
      trace->wealth.push_back(wealth);
      trace->bid_spread.push_back(bid_spread);
      trace->ask_spread.push_back(ask_spread);
      trace->bid_fills.push_back(static_cast<int>(bid_fills));
      trace->ask_fills.push_back(static_cast<int>(ask_fills));
      trace->rewards.push_back(reward);
    }
    mid = mid_next;
  }

  result.terminal_wealth = result.pnl_series.back();
  result.terminal_inventory = inventory;
  result.objective = result.terminal_wealth -
                     inventory_penalty(params, static_cast<double>(inventory));
  return result;
}

}  // namespace finflow::sim
