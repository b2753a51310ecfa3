#pragma once

#include <map>
#include <string>
#include <vector>

#include "finflow/harness/evaluate.hpp"
#include "finflow/meanflow/meanflow.hpp"
#include "finflow/noiserl/finetune.hpp"

namespace finflow::harness {

// Stage drivers shared by the CLI, the integration tests and the acceptance
// suite. Every stage writes its artifact to the config paths and is
// deterministic given (config, seed).

// Expert factory over the method registry, usable during demonstration
// collection (includes "ppo" when the bundle carries the expert checkpoint).
meanflow::ExpertFactory expert_factory(const AppConfig& cfg,
                                       const PolicyBundle& bundle);

std::vector<meanflow::ScenarioSpec> grid_scenarios(const AppConfig& cfg);

meanflow::DemoDataset run_collect(const AppConfig& cfg,
                                  const PolicyBundle& bundle);
meanflow::MeanFlowNet run_train(const AppConfig& cfg,
                                const meanflow::DemoDataset& data);
noiserl::FinetuneResult run_train_ppo_expert(const AppConfig& cfg);
noiserl::FinetuneResult run_finetune(const AppConfig& cfg,
                                     const meanflow::MeanFlowNet& frozen,
                                     const std::string& regime_name);
std::vector<EvalRow> run_benchmark(const AppConfig& cfg,
                                   const PolicyBundle& bundle,
                                   const std::vector<std::string>& methods,
                                   BenchmarkResult* detail = nullptr);

struct PipelineHashes {
  std::string dataset;
  std::string meanflow_params;
  std::string ppo_params;
  std::map<std::string, std::string> finflow_params;  // per regime
  std::string metrics_csv;
  std::string table;
};

// collect -> train ppo expert -> collect demos -> train meanflow -> finetune
// per regime -> benchmark. Returns content hashes of every artifact.
PipelineHashes run_full_pipeline(const AppConfig& cfg,
                                 const std::vector<std::string>& methods);

}  // namespace finflow::harness
