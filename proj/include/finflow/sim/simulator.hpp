#pragma once

#include <optional>
#include <string>
#include <utility>

#include "finflow/rng.hpp"
#include "finflow/sim/params.hpp"
#include "finflow/sim/types.hpp"

namespace finflow::sim {

// Anything that maps an observation to a planned chunk of quotes. plan() must
// be safe to call concurrently from multiple episodes (no mutable state
// besides the rng handed in).
class ChunkPolicy {
 public:
  virtual ~ChunkPolicy() = default;
  virtual ActionChunk plan(const Observation& obs, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

// One Euler step of the jump-diffusion mid-price:
//   s' = s (1 + mu dt + sigma db), then s' *= e^J if a jump fired.
// The result is floored at params.price_floor().
double step_price(double s_prev, const MarketParams& params, double db,
                  const std::optional<double>& jump_log_size);

// Applies market arrivals to the agent's quotes. Each market buy lifts the
// ask independently with probability exp(-kappa * ask_spread); each market
// sell hits the bid with probability exp(-kappa * bid_spread). One uniform is
// consumed per arrival (buys first), so a wider quote can only turn fills
// into misses on the same stream.
// Returns (bid_fills, ask_fills).
std::pair<long, long> apply_fills(double bid_spread, double ask_spread,
                                  int n_buy, int n_sell,
                                  const MarketParams& params, Rng& rng);

// Cash/inventory update for settled fills at mid price s.
void settle_fills(double& cash, long& inventory, double mid, double bid_spread,
                  double ask_spread, long bid_fills, long ask_fills);

double inventory_penalty(const MarketParams& params, double terminal_inventory);

struct EpisodeSeeds {
  std::uint64_t market = 0;
  std::uint64_t policy = 0;
};

// Runs one episode of horizon_steps steps. Every t_exec steps the policy is
// asked for a fresh chunk and only its first t_exec rows are executed.
// Deterministic given (params, policy, chunk_cfg, seeds); all market
// randomness is keyed off seeds.market only, so different policies replayed
// with the same market seed see identical prices and arrivals.
EpisodeResult run_episode(ChunkPolicy& policy, const MarketParams& params,
                          const ChunkConfig& chunk_cfg, EpisodeSeeds seeds,
                          EpisodeTrace* trace = nullptr);

inline EpisodeResult run_episode(ChunkPolicy& policy, const MarketParams& params,
                                 const ChunkConfig& chunk_cfg,
                                 std::uint64_t seed,
                                 EpisodeTrace* trace = nullptr) {
  return run_episode(policy, params, chunk_cfg,
                     EpisodeSeeds{seed, derive_seed(seed, {kStreamPolicy})},
                     trace);
}

}  // namespace finflow::sim
