#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace finflow::sim {

// Action-chunk timing: observe t_obs past steps, plan t_pred steps ahead,
// execute the first t_exec before replanning.
struct ChunkConfig {
  int t_obs = 2;
  int t_pred = 8;
  int t_exec = 4;
  void validate() const;
};

// A planned sequence of quotes: row k holds (bid spread, ask spread) for the
// k-th step after the decision point, in price units.
struct ActionChunk {
  Eigen::MatrixX2d spreads;  // t_pred rows

  int rows() const { return static_cast<int>(spreads.rows()); }
  double bid(int k) const { return spreads(k, 0); }
  double ask(int k) const { return spreads(k, 1); }

  // Row-major flattening (bid0, ask0, bid1, ask1, ...) used as the network
  // action space.
  Eigen::VectorXd flatten() const;
  static ActionChunk from_flat(const Eigen::Ref<const Eigen::VectorXd>& v);
};

// Per-step slice of the agent-visible window.
struct StepFeatures {
  double log_return = 0.0;
  double norm_inventory = 0.0;
  double norm_time_left = 1.0;
  double buy_intensity = 0.0;   // expected arrivals per step, lambda_a * dt
  double sell_intensity = 0.0;  // lambda_b * dt
  double bid_fill = 0.0;        // 1 if the bid was hit during the step
  double ask_fill = 0.0;        // 1 if the ask was lifted during the step
};

inline constexpr int kFeaturesPerStep = 7;

// Agent-visible state at a decision point: the last t_obs completed steps
// plus current inventory and elapsed-time fraction.
struct Observation {
  std::vector<StepFeatures> window;  // size t_obs, oldest first
  long inventory = 0;
  int step_index = 0;
  int horizon_steps = 1;
  double dt = 0.0;

  double elapsed_fraction() const {
    return static_cast<double>(step_index) / horizon_steps;
  }
  double remaining_time() const { return (horizon_steps - step_index) * dt; }

  static int dim(int t_obs) { return kFeaturesPerStep * t_obs + 2; }
  // Flat feature vector, every entry clipped to [-10, 10].
  Eigen::VectorXd flatten() const;
};

struct EpisodeResult {
  std::vector<double> pnl_series;  // W_0..W_T, mark-to-market wealth
  double terminal_wealth = 0.0;
  long terminal_inventory = 0;
  double objective = 0.0;          // W_T - c_inv * I_T^2
  long bid_fills = 0;
  long ask_fills = 0;
  std::uint64_t seed = 0;

  bool operator==(const EpisodeResult&) const = default;
};

// Optional per-step recording for dumps, RL rollouts and tests.
struct EpisodeTrace {
  std::vector<double> mid;        // S_0..S_T
  std::vector<double> inventory;  // after step t
  std::vector<double> wealth;     // W_0..W_T
  std::vector<double> bid_spread, ask_spread;
  std::vector<int> bid_fills, ask_fills;
  std::vector<double> rewards;    // per-step shaped reward
};

}  // namespace finflow::sim
