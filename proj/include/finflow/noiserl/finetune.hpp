#pragma once

#include <string>
#include <vector>

#include "finflow/noiserl/ppo.hpp"
#include "finflow/sim/params.hpp"

namespace finflow::noiserl {

// Halts fine-tuning when the mean episode objective stays below
// baseline - 0.5 |baseline| for five consecutive epochs.
class DivergenceGuard {
 public:
  explicit DivergenceGuard(double baseline, int patience = 5)
      : threshold_(baseline - 0.5 * std::abs(baseline)), patience_(patience) {}

  double threshold() const { return threshold_; }
  bool update(double mean_objective) {
    consecutive_ = mean_objective < threshold_ ? consecutive_ + 1 : 0;
    return consecutive_ >= patience_;
  }

 private:
  double threshold_;
  int patience_;
  int consecutive_ = 0;
};

struct FinetuneConfig {
  int iterations = 150;
  int episodes_per_iter = 32;
  std::uint64_t seed = 1;
  PpoConfig ppo;
  NoisePolicyConfig policy;
};

struct IterationStats {
  int iteration = 0;
  double mean_objective = 0.0;
  PpoStats ppo;
};

struct FinetuneResult {
  NoisePolicy policy;
  std::vector<IterationStats> curve;
  double baseline_objective = 0.0;  // iteration-0 (pre-update) mean objective
  bool halted_divergence = false;
};

// Stage 2: learns the Gaussian noise policy for the frozen decoder with PPO.
// Decision points fall every t_exec steps; the per-decision reward aggregates
// the executed sub-chunk's shaped step rewards. The frozen net is never
// touched (its parameter hash is asserted unchanged).
FinetuneResult fine_tune(const meanflow::MeanFlowNet& frozen,
                         const std::vector<sim::MarketParams>& markets,
                         const FinetuneConfig& cfg,
                         const std::string& curve_path = "");

// Same machinery with the identity decoder: the action-space PPO expert.
FinetuneResult train_ppo_expert(const std::vector<sim::MarketParams>& markets,
                                const sim::ChunkConfig& chunk,
                                const FinetuneConfig& cfg,
                                const std::string& curve_path = "");

}  // namespace finflow::noiserl
