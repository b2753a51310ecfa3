#include "finflow/harness/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "finflow/digest.hpp"
#include "finflow/meanflow/checkpoint.hpp"

namespace finflow::harness {

namespace fs = std::filesystem;

namespace {
void ensure_parent_dir(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}
}  // namespace

meanflow::ExpertFactory expert_factory(const AppConfig& cfg,
                                       const PolicyBundle& bundle) {
  return [&cfg, &bundle](const std::string& expert,
                         const sim::MarketParams& market) {
    return make_policy(expert, market, /*regime=*/"", cfg, bundle);
  };
}

std::vector<meanflow::ScenarioSpec> grid_scenarios(const AppConfig& cfg) {
  const ScenarioGrid grid = build_scenario_grid(cfg.grid, cfg.market);
  std::vector<meanflow::ScenarioSpec> specs;
  specs.reserve(grid.size());
  for (const auto& d : grid.scenarios) specs.push_back({d.name, d.market});
  return specs;
}

meanflow::DemoDataset run_collect(const AppConfig& cfg,
                                  const PolicyBundle& bundle) {
  const auto data = meanflow::collect_demonstrations(
      grid_scenarios(cfg), expert_factory(cfg, bundle), cfg.chunk, cfg.collect);
  ensure_parent_dir(cfg.paths.dataset);
  data.save(cfg.paths.dataset);
  return data;
}

meanflow::MeanFlowNet run_train(const AppConfig& cfg,
                                const meanflow::DemoDataset& data) {
  ensure_parent_dir(cfg.paths.meanflow_ckpt);
  const std::string curve = cfg.paths.meanflow_ckpt + ".curve.txt";
  meanflow::MeanFlowNet net =
      meanflow::pretrain_from_dataset(data, cfg.meanflow_net, cfg.train, curve);
  meanflow::save_meanflow(net, cfg.paths.meanflow_ckpt);
  return net;
}

noiserl::FinetuneResult run_train_ppo_expert(const AppConfig& cfg) {
  std::vector<sim::MarketParams> markets;
  for (const auto& spec : grid_scenarios(cfg)) markets.push_back(spec.market);
  ensure_parent_dir(cfg.paths.ppo_ckpt);
  noiserl::FinetuneResult result = noiserl::train_ppo_expert(
      markets, cfg.chunk, cfg.ppo_expert, cfg.paths.ppo_ckpt + ".curve.txt");
  noiserl::save_noise_policy(result.policy, cfg.paths.ppo_ckpt);
  return result;
}

noiserl::FinetuneResult run_finetune(const AppConfig& cfg,
                                     const meanflow::MeanFlowNet& frozen,
                                     const std::string& regime_name) {
  const RegimeSpec* regime = nullptr;
  for (const auto& r : cfg.regimes)
    if (r.name == regime_name) regime = &r;
  if (!regime)
    throw std::invalid_argument("finetune: unknown regime " + regime_name);

  noiserl::FinetuneConfig fcfg = cfg.finetune;
  fcfg.seed = derive_seed(cfg.seed, {fnv1a("finetune"), fnv1a(regime_name)});
  const std::string out_path = cfg.finflow_ckpt_path(regime_name);
  ensure_parent_dir(out_path);
  noiserl::FinetuneResult result =
      noiserl::fine_tune(frozen, {regime_market(*regime, cfg.market)}, fcfg,
                         out_path + ".curve.txt");
  noiserl::save_noise_policy(result.policy, out_path);
  return result;
}

std::vector<EvalRow> run_benchmark(const AppConfig& cfg,
                                   const PolicyBundle& bundle,
                                   const std::vector<std::string>& methods,
                                   BenchmarkResult* detail) {
  BenchmarkResult result = benchmark_all(methods, cfg.regimes, cfg.eval_trials,
                                         cfg.eval_seed, cfg, bundle);
  std::vector<EvalRow> rows;
  rows.reserve(result.cells.size());
  for (const auto& c : result.cells) rows.push_back(c.row);

  fs::create_directories(cfg.paths.report_dir);
  write_metrics_csv(rows, cfg.paths.report_dir + "/metrics.csv");
  const std::string table = format_metrics_table(rows);
  {
    std::ofstream out(cfg.paths.report_dir + "/table.txt",
                      std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("benchmark: cannot write table");
    out << table;
  }
  if (detail) *detail = std::move(result);
  return rows;
}

PipelineHashes run_full_pipeline(const AppConfig& cfg,
                                 const std::vector<std::string>& methods) {
  PipelineHashes hashes;

  run_train_ppo_expert(cfg);
  PolicyBundle bundle;
  bundle.ppo_expert = noiserl::load_noise_policy(cfg.paths.ppo_ckpt);
  hashes.ppo_params = bundle.ppo_expert->param_hash();

  const meanflow::DemoDataset data = run_collect(cfg, bundle);
  hashes.dataset = data.content_hash();

  const meanflow::MeanFlowNet net = run_train(cfg, data);
  bundle.frozen = meanflow::load_meanflow(cfg.paths.meanflow_ckpt);
  hashes.meanflow_params = bundle.frozen->param_hash();

  for (const auto& regime : cfg.regimes) {
    run_finetune(cfg, *bundle.frozen, regime.name);
    bundle.finflow.emplace(
        regime.name,
        noiserl::load_noise_policy(cfg.finflow_ckpt_path(regime.name)));
    hashes.finflow_params[regime.name] =
        bundle.finflow.at(regime.name).param_hash();
  }

  run_benchmark(cfg, bundle, methods);
  hashes.metrics_csv = sha256_hex_of_file(cfg.paths.report_dir + "/metrics.csv");
  hashes.table = sha256_hex_of_file(cfg.paths.report_dir + "/table.txt");
  return hashes;
}

}  // namespace finflow::harness
