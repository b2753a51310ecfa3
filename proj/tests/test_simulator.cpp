#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finflow/sim/fbm.hpp"
#include "finflow/sim/hawkes.hpp"
#include "finflow/sim/simulator.hpp"

using namespace finflow;
using namespace finflow::sim;

namespace {

MarketParams quiet_market() {
  MarketParams m;
  m.mu = 0.0;
  m.sigma = 0.0;
  m.jump_intensity = 0.0;
  m.hawkes.mu_a = 0.0;
  m.hawkes.mu_b = 0.0;
  m.hawkes.alpha_aa = m.hawkes.alpha_ab = m.hawkes.alpha_bb = m.hawkes.alpha_ba = 0.0;
  return m;
}

class FixedQuotePolicy : public ChunkPolicy {
 public:
  FixedQuotePolicy(double bid, double ask, int t_pred)
      : bid_(bid), ask_(ask), t_pred_(t_pred) {}
  ActionChunk plan(const Observation&, Rng&) override {
    ActionChunk c;
    c.spreads.resize(t_pred_, 2);
    c.spreads.col(0).setConstant(bid_);
    c.spreads.col(1).setConstant(ask_);
    return c;
  }
  std::string name() const override { return "fixed"; }

 private:
  double bid_, ask_;
  int t_pred_;
};

class WrongShapePolicy : public ChunkPolicy {
 public:
  ActionChunk plan(const Observation&, Rng&) override {
    ActionChunk c;
    c.spreads.resize(3, 2);
    c.spreads.setZero();
    return c;
  }
  std::string name() const override { return "wrong"; }
};

}  // namespace

TEST_CASE("market params validation") {
  MarketParams m;
  CHECK_NOTHROW(m.validate());
  SUBCASE("hurst bounds") {
    m.hurst = 1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("jump rate vs dt") {
    m.jump_intensity = 10.0;
    m.dt = 0.01;
    CHECK_NOTHROW(m.validate());
    m.jump_intensity = 11.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("hawkes stability") {
    m.hawkes.alpha_aa = 2.5;  // row sum 2.7 > beta
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("negative vol") {
    m.sigma = -0.1;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
}

TEST_CASE("hawkes spectral radius and stationary rates") {
  HawkesParams h;
  h.mu_a = h.mu_b = 1.0;
  h.alpha_aa = h.alpha_bb = 0.5;
  h.alpha_ab = h.alpha_ba = 0.0;
  h.beta = 1.0;
  CHECK(h.branching_spectral_radius() == doctest::Approx(0.5));
  double ra, rb;
  h.stationary_rates(ra, rb);
  CHECK(ra == doctest::Approx(2.0));  // mu / (1 - alpha/beta)
  CHECK(rb == doctest::Approx(2.0));
}

TEST_CASE("step_price arithmetic") {
  MarketParams m = quiet_market();
  SUBCASE("degenerate dynamics keep the price") {
    CHECK(step_price(100.0, m, 0.0, std::nullopt) == doctest::Approx(100.0));
  }
  SUBCASE("pure drift") {
    m.mu = 0.1;
    m.dt = 0.01;
    CHECK(step_price(100.0, m, 0.0, std::nullopt) == doctest::Approx(100.1));
  }
  SUBCASE("multiplicative jump") {
    const double j = std::log(1.05);
    CHECK(step_price(100.0, m, 0.0, j) == doctest::Approx(105.0));
  }
  SUBCASE("floored at epsilon") {
    m.sigma = 1.0;
    CHECK(step_price(100.0, m, -50.0, std::nullopt) ==
          doctest::Approx(m.price_floor()));
  }
}

TEST_CASE("hawkes intensities: poisson degenerate case") {
  HawkesParams h;
  h.mu_a = 3.0;
  h.mu_b = 4.0;
  h.alpha_aa = h.alpha_ab = h.alpha_bb = h.alpha_ba = 0.0;
  HawkesState s;
  auto [la, lb] = hawkes_intensities(s, h, 5.0);
  CHECK(la == doctest::Approx(3.0));
  CHECK(lb == doctest::Approx(4.0));
}

TEST_CASE("hawkes intensities: one-kernel decay arithmetic") {
  HawkesParams h;
  h.mu_a = 1.0;
  h.mu_b = 0.0;
  h.beta = 1.0;
  HawkesState s;
  s.exc_aa = 2.0;
  s.last_update = 0.0;
  auto [la, lb] = hawkes_intensities(s, h, std::log(2.0));
  CHECK(la == doctest::Approx(2.0));  // 1 + 2 * exp(-ln 2)
  CHECK(lb == doctest::Approx(0.0));
}

TEST_CASE("event excitation updates") {
  HawkesParams h;
  HawkesState s;
  apply_event_excitation(s, h, OrderSide::Buy);
  CHECK(s.exc_aa == doctest::Approx(h.alpha_aa));
  CHECK(s.exc_ba == doctest::Approx(h.alpha_ba));
  CHECK(s.exc_bb == 0.0);
  CHECK(s.exc_ab == 0.0);
  apply_event_excitation(s, h, OrderSide::Sell);
  CHECK(s.exc_bb == doctest::Approx(h.alpha_bb));
  CHECK(s.exc_ab == doctest::Approx(h.alpha_ab));
}

TEST_CASE("hawkes step: zero excitation reduces to poisson") {
  HawkesParams h;
  h.mu_a = 20.0;
  h.mu_b = 0.0;
  h.alpha_aa = h.alpha_ab = h.alpha_bb = h.alpha_ba = 0.0;
  HawkesState s;
  Rng rng(7);
  long buys = 0;
  const double horizon = 100.0, dt = 0.5;
  for (double t = 0; t < horizon; t += dt) {
    const auto r = simulate_hawkes_step(s, h, dt, rng);
    buys += r.n_buy;
    CHECK(r.n_sell == 0);
  }
  const double expected = 20.0 * horizon;
  CHECK(std::abs(buys - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("hawkes step: self-excited long-run rate matches branching ratio") {
  HawkesParams h;
  h.mu_a = h.mu_b = 1.0;
  h.alpha_aa = h.alpha_bb = 0.5;
  h.alpha_ab = h.alpha_ba = 0.0;
  h.beta = 1.0;
  HawkesState s;
  Rng rng(11);
  long buys = 0, sells = 0;
  const double horizon = 10000.0, dt = 1.0;
  for (double t = 0; t < horizon; t += dt) {
    const auto r = simulate_hawkes_step(s, h, dt, rng);
    buys += r.n_buy;
    sells += r.n_sell;
  }
  CHECK(buys / horizon == doctest::Approx(2.0).epsilon(0.05));
  CHECK(sells / horizon == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("hawkes step: cross-only excitation matches the 2x2 linear system") {
  HawkesParams h;
  h.mu_a = 1.0;
  h.mu_b = 0.5;
  h.alpha_aa = h.alpha_bb = 0.0;
  h.alpha_ab = 0.6;  // sells excite buys
  h.alpha_ba = 0.3;  // buys excite sells
  h.beta = 1.5;
  // Oracle: solve (I - K) rate = mu by hand.
  const double kab = h.alpha_ab / h.beta, kba = h.alpha_ba / h.beta;
  const double det = 1.0 - kab * kba;
  const double ra = (h.mu_a + kab * h.mu_b) / det;
  const double rb = (h.mu_b + kba * h.mu_a) / det;

  HawkesState s;
  Rng rng(13);
  long buys = 0, sells = 0;
  const double horizon = 10000.0, dt = 1.0;
  for (double t = 0; t < horizon; t += dt) {
    const auto r = simulate_hawkes_step(s, h, dt, rng);
    buys += r.n_buy;
    sells += r.n_sell;
  }
  const double got_ratio = static_cast<double>(buys) / sells;
  CHECK(got_ratio == doctest::Approx(ra / rb).epsilon(0.05));
  double ra2, rb2;
  h.stationary_rates(ra2, rb2);
  CHECK(ra2 == doctest::Approx(ra));
  CHECK(rb2 == doctest::Approx(rb));
}

TEST_CASE("apply_fills") {
  MarketParams m;
  m.fill_decay = 2.0;
  SUBCASE("zero spread fills every arrival") {
    Rng rng(3);
    const auto [bid, ask] = apply_fills(0.0, 0.0, 10, 7, m, rng);
    CHECK(ask == 10);
    CHECK(bid == 7);
  }
  SUBCASE("no arrivals, no fills") {
    Rng rng(3);
    const auto [bid, ask] = apply_fills(0.1, 0.1, 0, 0, m, rng);
    CHECK(bid == 0);
    CHECK(ask == 0);
  }
  SUBCASE("fill rate matches exp(-kappa delta) within 2%") {
    Rng rng(5);
    long fills = 0;
    const int arrivals = 100000;
    const auto [bid, ask] = apply_fills(0.0, 0.5, arrivals, 0, m, rng);
    fills = ask;
    (void)bid;
    const double expected = std::exp(-1.0);
    CHECK(static_cast<double>(fills) / arrivals ==
          doctest::Approx(expected).epsilon(0.02));
  }
  SUBCASE("rejects negative spreads") {
    Rng rng(3);
    CHECK_THROWS_AS(apply_fills(-0.1, 0.0, 1, 1, m, rng), std::invalid_argument);
  }
}

TEST_CASE("fill monotonicity on a shared stream") {
  // Same uniforms, wider ask: the fill indicator can only switch off.
  MarketParams m;
  m.fill_decay = 1.5;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng_narrow(1000 + trial);
    Rng rng_wide(1000 + trial);
    const auto [b1, a1] = apply_fills(0.3, 0.4, 50, 50, m, rng_narrow);
    const auto [b2, a2] = apply_fills(0.3, 0.9, 50, 50, m, rng_wide);
    CHECK(a2 <= a1);
    CHECK(b2 == b1);
  }
}

TEST_CASE("settle_fills round trip earns the full spread") {
  double cash = 0.0;
  long inventory = 0;
  settle_fills(cash, inventory, 100.0, 0.5, 0.5, 1, 0);
  CHECK(cash == doctest::Approx(-99.5));
  CHECK(inventory == 1);
  settle_fills(cash, inventory, 100.0, 0.5, 0.5, 0, 1);
  CHECK(cash == doctest::Approx(1.0));
  CHECK(inventory == 0);
  // W_T = cash at zero inventory; objective = 1.0 with no penalty applied.
  MarketParams m;
  CHECK(cash - inventory_penalty(m, inventory) == doctest::Approx(1.0));
}

TEST_CASE("run_episode: nothing happens in a dead market") {
  MarketParams m = quiet_market();
  ChunkConfig cfg;
  FixedQuotePolicy policy(0.5, 0.5, cfg.t_pred);
  const EpisodeResult r = run_episode(policy, m, cfg, 1);
  CHECK(r.objective == doctest::Approx(0.0));
  CHECK(r.terminal_inventory == 0);
  CHECK(r.bid_fills == 0);
  CHECK(r.ask_fills == 0);
  CHECK(static_cast<int>(r.pnl_series.size()) == m.horizon_steps + 1);
  for (double w : r.pnl_series) CHECK(w == doctest::Approx(0.0));
}

TEST_CASE("run_episode: determinism is byte-exact") {
  MarketParams m;
  ChunkConfig cfg;
  FixedQuotePolicy policy(0.4, 0.4, cfg.t_pred);
  const EpisodeResult a = run_episode(policy, m, cfg, 12345);
  const EpisodeResult b = run_episode(policy, m, cfg, 12345);
  CHECK(a == b);
  const EpisodeResult c = run_episode(policy, m, cfg, 12346);
  CHECK_FALSE(a == c);
}

TEST_CASE("run_episode: accounting identity holds at every step") {
  MarketParams m;
  m.sigma = 0.2;
  m.jump_intensity = 2.0;
  ChunkConfig cfg;
  FixedQuotePolicy policy(0.3, 0.3, cfg.t_pred);
  EpisodeTrace trace;
  const EpisodeResult r = run_episode(policy, m, cfg, 777, &trace);
  REQUIRE(trace.mid.size() == r.pnl_series.size());
  // Wealth recorded must equal cash + I * S; reconstruct cash from fills.
  double cash = 0.0;
  for (std::size_t t = 0; t < trace.bid_spread.size(); ++t) {
    cash -= trace.bid_fills[t] * (trace.mid[t] - trace.bid_spread[t]);
    cash += trace.ask_fills[t] * (trace.mid[t] + trace.ask_spread[t]);
    const double w = cash + trace.inventory[t + 1] * trace.mid[t + 1];
    CHECK(w == doctest::Approx(trace.wealth[t + 1]).epsilon(1e-12));
  }
  // Shaped rewards telescope to the terminal objective.
  double reward_sum = 0.0;
  for (double rw : trace.rewards) reward_sum += rw;
  CHECK(reward_sum == doctest::Approx(r.objective).epsilon(1e-9));
}

TEST_CASE("run_episode: jump moments with sigma=0") {
  MarketParams m = quiet_market();
  m.jump_intensity = 3.0;
  m.jump_mean = 0.01;
  m.jump_std = 0.0;
  ChunkConfig cfg;
  FixedQuotePolicy policy(5.0, 5.0, cfg.t_pred);
  double log_return_sum = 0.0;
  const int episodes = 400;
  for (int e = 0; e < episodes; ++e) {
    EpisodeTrace trace;
    run_episode(policy, m, cfg, 50000 + e, &trace);
    log_return_sum += std::log(trace.mid.back() / trace.mid.front());
  }
  const double horizon = m.horizon_steps * m.dt;
  const double expected = m.jump_intensity * horizon * m.jump_mean;
  const double per_episode_var =
      m.jump_intensity * horizon * m.jump_mean * m.jump_mean;
  const double se = std::sqrt(per_episode_var / episodes);
  CHECK(std::abs(log_return_sum / episodes - expected) < 4.0 * se);
}

TEST_CASE("run_episode rejects wrong chunk shapes") {
  MarketParams m = quiet_market();
  ChunkConfig cfg;
  WrongShapePolicy policy;
  CHECK_THROWS_WITH_AS(run_episode(policy, m, cfg, 1),
                       doctest::Contains("wrong shape"), std::runtime_error);
}

TEST_CASE("observation dimensionality and clipping") {
  Observation obs;
  obs.window.resize(2);
  obs.window[1].log_return = 123.0;  // must clip
  obs.inventory = -500;
  obs.step_index = 50;
  obs.horizon_steps = 100;
  CHECK(Observation::dim(2) == 16);
  const Eigen::VectorXd v = obs.flatten();
  REQUIRE(v.size() == 16);
  CHECK(v.maxCoeff() <= 10.0);
  CHECK(v.minCoeff() >= -10.0);
  CHECK(v(7 + 0) == doctest::Approx(10.0));   // clipped log return
  CHECK(v(14) == doctest::Approx(-10.0));     // clipped raw inventory
  CHECK(v(15) == doctest::Approx(0.5));       // elapsed fraction
}

TEST_CASE("paired market streams: same trial, different policy") {
  // Identical market seed, different policy seeds: identical price paths and
  // arrival-driven fill opportunities.
  MarketParams m;
  ChunkConfig cfg;
  FixedQuotePolicy tight(0.1, 0.1, cfg.t_pred);
  FixedQuotePolicy wide(1.5, 1.5, cfg.t_pred);
  EpisodeTrace ta, tb;
  run_episode(tight, m, cfg, EpisodeSeeds{99, 1}, &ta);
  run_episode(wide, m, cfg, EpisodeSeeds{99, 2}, &tb);
  CHECK(ta.mid == tb.mid);
  long fills_tight = 0, fills_wide = 0;
  for (std::size_t t = 0; t < ta.bid_fills.size(); ++t) {
    fills_tight += ta.bid_fills[t] + ta.ask_fills[t];
    fills_wide += tb.bid_fills[t] + tb.ask_fills[t];
  }
  CHECK(fills_wide <= fills_tight);
}
