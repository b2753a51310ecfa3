// finflow: simulate markets, collect expert demonstrations, train the
// average-velocity policy, fine-tune the noise policy and benchmark all
// methods across regimes. Every stage is reproducible from one config file
// plus one seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "finflow/harness/episode_dump.hpp"
#include "finflow/harness/pipeline.hpp"
#include "finflow/meanflow/checkpoint.hpp"

using namespace finflow;

namespace {

harness::AppConfig load_or_default(const std::string& path,
                                   std::uint64_t seed_override,
                                   bool has_seed) {
  harness::AppConfig cfg =
      path.empty() ? harness::AppConfig{} : harness::load_config(path);
  if (has_seed) {
    cfg.seed = seed_override;
    cfg.sync_seeds();
  }
  return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& method,
                 const std::string& regime_name, std::uint64_t seed,
                 bool has_seed, const std::string& out) {
  const harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
  const harness::PolicyBundle bundle = harness::load_bundle(cfg);

  sim::MarketParams market = cfg.market;
  std::string regime_key;
  if (!regime_name.empty()) {
    for (const auto& r : cfg.regimes)
      if (r.name == regime_name) {
        market = harness::regime_market(r, cfg.market);
        regime_key = r.name;
      }
    if (regime_key.empty()) {
      std::cerr << "unknown regime: " << regime_name << "\n";
      return 1;
    }
  }

  auto policy = harness::make_policy(method, market, regime_key, cfg, bundle);
  sim::EpisodeTrace trace;
  const sim::EpisodeResult result =
      sim::run_episode(*policy, market, cfg.chunk, cfg.seed, &trace);
  if (!out.empty()) harness::write_episode_csv(trace, out);
  std::printf("method=%s seed=%llu objective=%.6f terminal_wealth=%.6f "
              "terminal_inventory=%ld fills=%ld/%ld\n",
              method.c_str(), static_cast<unsigned long long>(result.seed),
              result.objective, result.terminal_wealth,
              result.terminal_inventory, result.bid_fills, result.ask_fills);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finflow market-making laboratory"};
  app.require_subcommand(1);

  std::string config_path, out, method = "glft", regime, data_path, frozen_path;
  std::string in_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int trials = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (json)");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t s) {
          seed = s;
          has_seed = true;
        },
        "override the config seed");
  };

  auto* sub_init = app.add_subcommand("init-config",
                                      "write the default config to --out");
  sub_init->add_option("--out", out, "output path")->required();

  auto* sub_sim = app.add_subcommand("simulate", "run one episode, dump csv");
  add_common(sub_sim);
  sub_sim->add_option("--method", method, "policy name");
  sub_sim->add_option("--regime", regime, "evaluate in a benchmark regime");
  sub_sim->add_option("--out", out, "episode csv path");

  auto* sub_collect = app.add_subcommand(
      "collect-demos", "select best experts per scenario and record pairs");
  add_common(sub_collect);
  sub_collect->add_option("--scenarios", config_path,
                          "alias for --config (scenario source)");
  sub_collect->add_option("--out", out, "dataset output path");

  auto* sub_train = app.add_subcommand("train-meanflow",
                                       "pre-train the average-velocity policy");
  add_common(sub_train);
  sub_train->add_option("--data", data_path, "dataset path (default from config)");
  sub_train->add_option("--out", out, "checkpoint output path");

  auto* sub_ppo = app.add_subcommand("train-ppo-expert",
                                     "train the action-space PPO baseline");
  add_common(sub_ppo);
  sub_ppo->add_option("--out", out, "checkpoint output path");

  auto* sub_ft = app.add_subcommand("finetune",
                                    "learn the noise policy for one regime");
  add_common(sub_ft);
  sub_ft->add_option("--frozen", frozen_path, "meanflow checkpoint");
  sub_ft->add_option("--regime", regime, "regime name (default: all regimes)");
  sub_ft->add_option("--out", out, "checkpoint output path");

  auto* sub_eval = app.add_subcommand("evaluate", "metrics for one method/regime");
  add_common(sub_eval);
  sub_eval->add_option("--method", method, "policy name")->required();
  sub_eval->add_option("--regime", regime, "regime name")->required();
  sub_eval->add_option("--trials", trials, "trial count");
  sub_eval->add_option("--out", out, "csv row output path");

  auto* sub_bench = app.add_subcommand("benchmark",
                                       "full method x regime comparison");
  add_common(sub_bench);
  sub_bench->add_option("--trials", trials, "trial count");
  sub_bench->add_option("--out", out, "report directory");

  auto* sub_report = app.add_subcommand("report", "render a metrics csv");
  sub_report->add_option("--in", in_path, "metrics csv")->required();
  sub_report->add_option("--out", out, "table output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_init->parsed()) {
      harness::save_config(harness::AppConfig{}, out);
      std::printf("wrote %s\n", out.c_str());
      return 0;
    }
    if (sub_sim->parsed())
      return cmd_simulate(config_path, method, regime, seed, has_seed, out);

    if (sub_collect->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (!out.empty()) cfg.paths.dataset = out;
      const harness::PolicyBundle bundle = harness::load_bundle(cfg);
      for (const auto& e : cfg.collect.experts)
        if (e == "ppo" && !bundle.ppo_expert)
          throw std::runtime_error(
              "collect includes 'ppo' but no expert checkpoint exists; run "
              "train-ppo-expert first");
      const auto data = harness::run_collect(cfg, bundle);
      std::printf("scenarios=%zu pairs=%zu hash=%s -> %s\n",
                  data.scenarios.size(), data.size(),
                  data.content_hash().c_str(), cfg.paths.dataset.c_str());
      return 0;
    }
    if (sub_train->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (!out.empty()) cfg.paths.meanflow_ckpt = out;
      const std::string src = data_path.empty() ? cfg.paths.dataset : data_path;
      const auto data = meanflow::DemoDataset::load(src);
      const auto net = harness::run_train(cfg, data);
      std::printf("trained %zu params, checkpoint %s (params %s)\n",
                  net.param_count(), cfg.paths.meanflow_ckpt.c_str(),
                  net.param_hash().substr(0, 12).c_str());
      return 0;
    }
    if (sub_ppo->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (!out.empty()) cfg.paths.ppo_ckpt = out;
      const auto result = harness::run_train_ppo_expert(cfg);
      std::printf("ppo expert: baseline %.4f final %.4f -> %s\n",
                  result.baseline_objective,
                  result.curve.empty() ? 0.0 : result.curve.back().mean_objective,
                  cfg.paths.ppo_ckpt.c_str());
      return 0;
    }
    if (sub_ft->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (!frozen_path.empty()) cfg.paths.meanflow_ckpt = frozen_path;
      const auto frozen = meanflow::load_meanflow(cfg.paths.meanflow_ckpt);
      std::vector<std::string> names;
      if (regime.empty())
        for (const auto& r : cfg.regimes) names.push_back(r.name);
      else
        names.push_back(regime);
      for (const auto& name : names) {
        const auto result = harness::run_finetune(cfg, frozen, name);
        std::string written = cfg.finflow_ckpt_path(name);
        if (!out.empty() && names.size() == 1) {
          std::filesystem::copy_file(
              written, out, std::filesystem::copy_options::overwrite_existing);
          written = out;
        }
        std::printf("finetune %s: baseline %.4f final %.4f%s -> %s\n",
                    name.c_str(), result.baseline_objective,
                    result.curve.empty() ? 0.0
                                         : result.curve.back().mean_objective,
                    result.halted_divergence ? " (halted: divergence guard)" : "",
                    written.c_str());
      }
      return 0;
    }
    if (sub_eval->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (trials > 0) cfg.eval_trials = trials;
      const harness::PolicyBundle bundle = harness::load_bundle(cfg);
      const harness::RegimeSpec* spec = nullptr;
      for (const auto& r : cfg.regimes)
        if (r.name == regime) spec = &r;
      if (!spec) throw std::runtime_error("unknown regime: " + regime);
      const auto detail = harness::evaluate(method, *spec, cfg.eval_trials,
                                            cfg.eval_seed, cfg, bundle);
      const std::string csv = harness::metrics_to_csv({detail.row});
      if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc | std::ios::binary);
        f << csv;
      }
      std::fputs(harness::format_metrics_table({detail.row}).c_str(), stdout);
      return 0;
    }
    if (sub_bench->parsed()) {
      harness::AppConfig cfg = load_or_default(config_path, seed, has_seed);
      if (trials > 0) cfg.eval_trials = trials;
      if (!out.empty()) cfg.paths.report_dir = out;
      const harness::PolicyBundle bundle = harness::load_bundle(cfg);
      std::vector<std::string> methods;
      for (const auto& m : harness::kAllMethods)
        if (bundle.has(m, cfg.regimes.front().name)) methods.push_back(m);
      const auto rows = harness::run_benchmark(cfg, bundle, methods);
      std::fputs(harness::format_metrics_table(rows).c_str(), stdout);
      std::printf("report written to %s\n", cfg.paths.report_dir.c_str());
      return 0;
    }
    if (sub_report->parsed()) {
      const auto rows = harness::read_metrics_csv(in_path);
      const std::string table = harness::format_metrics_table(rows);
      if (out.empty()) {
        std::fputs(table.c_str(), stdout);
      } else {
        std::ofstream f(out, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << table;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
