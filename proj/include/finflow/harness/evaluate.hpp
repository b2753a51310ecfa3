#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finflow/harness/config.hpp"
#include "finflow/harness/scenario.hpp"
#include "finflow/noiserl/policy.hpp"

namespace finflow::harness {

inline const std::vector<std::string> kAllMethods = {
    "random", "as", "glft", "glft_drift", "ppo", "meanflow", "finflowrl"};

// Loaded checkpoints backing the network methods. Policies built by
// make_policy keep references into the bundle, which must outlive them.
struct PolicyBundle {
  std::optional<meanflow::MeanFlowNet> frozen;
  std::optional<noiserl::NoisePolicy> ppo_expert;
  std::map<std::string, noiserl::NoisePolicy> finflow;  // keyed by regime name

  bool has(const std::string& method, const std::string& regime) const;
};

// Loads whatever checkpoints exist at the config paths; methods whose
// checkpoints are missing simply stay unavailable.
PolicyBundle load_bundle(const AppConfig& cfg, bool require_all = false);

std::unique_ptr<sim::ChunkPolicy> make_policy(const std::string& method,
                                              const sim::MarketParams& market,
                                              const std::string& regime,
                                              const AppConfig& cfg,
                                              const PolicyBundle& bundle);

struct EvalRow {
  std::string method;
  std::string regime;
  int trials = 0;
  std::uint64_t base_seed = 0;
  double pnl_mean = 0.0, pnl_se = 0.0;
  double sharpe = 0.0, sharpe_se = 0.0;
  bool sr_degenerate = false;
  double mdd_mean = 0.0, mdd_se = 0.0;
};

struct EvalDetail {
  EvalRow row;
  std::vector<double> objectives;  // per trial
  std::vector<double> drawdowns;   // per trial, percent
};

// Runs n_trials paired seeded episodes. The market stream is keyed by
// (base_seed, trial) only, so every method sees identical price paths and
// arrivals at the same trial index; the policy stream is additionally keyed
// by the method name.
EvalDetail evaluate_policy(sim::ChunkPolicy& policy, const std::string& method,
                           const std::string& regime,
                           const sim::MarketParams& market,
                           const sim::ChunkConfig& chunk, int n_trials,
                           std::uint64_t base_seed);

// Convenience: method by name from the registry.
EvalDetail evaluate(const std::string& method, const RegimeSpec& regime,
                    int n_trials, std::uint64_t base_seed, const AppConfig& cfg,
                    const PolicyBundle& bundle);

struct BenchmarkResult {
  std::vector<EvalDetail> cells;  // methods x regimes, regime-major rows

  const EvalDetail& cell(const std::string& method,
                         const std::string& regime) const;
};

BenchmarkResult benchmark_all(const std::vector<std::string>& methods,
                              const std::vector<RegimeSpec>& regimes,
                              int n_trials, std::uint64_t base_seed,
                              const AppConfig& cfg, const PolicyBundle& bundle);

// Machine-readable columnar report; rewriting parsed rows reproduces the file
// byte for byte.
std::string metrics_to_csv(const std::vector<EvalRow>& rows);
std::vector<EvalRow> metrics_from_csv(const std::string& text);
void write_metrics_csv(const std::vector<EvalRow>& rows, const std::string& path);
std::vector<EvalRow> read_metrics_csv(const std::string& path);

// Aligned text table, one block per regime.
std::string format_metrics_table(const std::vector<EvalRow>& rows);

}  // namespace finflow::harness
