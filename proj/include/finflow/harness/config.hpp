#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finflow/experts/experts.hpp"
#include "finflow/harness/scenario.hpp"
#include "finflow/meanflow/meanflow.hpp"
#include "finflow/noiserl/finetune.hpp"
#include "finflow/sim/params.hpp"

namespace finflow::harness {

// One experiment config: a full pipeline run (collect, train, finetune,
// benchmark) is reproducible from this plus a seed. Stored as versioned JSON
// (format_version); unknown keys are rejected to catch typos.
struct AppConfig {
  static constexpr int kFormatVersion = 1;

  std::uint64_t seed = 1;
  sim::ChunkConfig chunk;
  sim::MarketParams market;  // base scenario; grid/regimes override axes
  experts::ExpertParams experts;
  // When unset, glft_drift uses the scenario's true drift as its estimate.
  std::optional<double> drift_estimate_override;
  GridConfig grid;
  std::vector<RegimeSpec> regimes = default_regimes();

  meanflow::CollectConfig collect;
  meanflow::MeanFlowConfig meanflow_net;
  meanflow::TrainConfig train;
  noiserl::FinetuneConfig finetune;
  noiserl::FinetuneConfig ppo_expert;

  int eval_trials = 10000;
  std::uint64_t eval_seed = 9000;

  struct Paths {
    std::string dataset = "out/demos.ffds";
    std::string meanflow_ckpt = "out/meanflow.ckpt";
    std::string ppo_ckpt = "out/ppo_expert.ckpt";
    std::string finflow_dir = "out";  // noise_<REGIME>.ckpt per regime
    std::string report_dir = "out";
  } paths;

  AppConfig();

  // Threads the top-level seed into every stage config.
  void sync_seeds();

  // Expert params for one concrete market (fills in the drift estimate).
  experts::ExpertParams experts_for(const sim::MarketParams& m) const;

  std::string finflow_ckpt_path(const std::string& regime) const;
};

AppConfig load_config(const std::string& path);
void save_config(const AppConfig& cfg, const std::string& path);
std::string config_to_json(const AppConfig& cfg);
AppConfig config_from_json(const std::string& text);

}  // namespace finflow::harness
