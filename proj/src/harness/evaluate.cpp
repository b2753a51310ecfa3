#include "finflow/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "finflow/harness/metrics.hpp"
#include "finflow/meanflow/checkpoint.hpp"
#include "finflow/parallel.hpp"

namespace finflow::harness {

bool PolicyBundle::has(const std::string& method, const std::string& regime) const {
  if (method == "ppo") return ppo_expert.has_value();
  if (method == "meanflow") return frozen.has_value();
  if (method == "finflowrl") return frozen.has_value() && finflow.count(regime) > 0;
  return true;  // closed-form methods need no checkpoint
}

PolicyBundle load_bundle(const AppConfig& cfg, bool require_all) {
  namespace fs = std::filesystem;
  PolicyBundle bundle;
  if (fs::exists(cfg.paths.meanflow_ckpt))
    bundle.frozen = meanflow::load_meanflow(cfg.paths.meanflow_ckpt);
  if (fs::exists(cfg.paths.ppo_ckpt))
    bundle.ppo_expert = noiserl::load_noise_policy(cfg.paths.ppo_ckpt);
  for (const auto& regime : cfg.regimes) {
    const std::string path = cfg.finflow_ckpt_path(regime.name);
    if (fs::exists(path)) bundle.finflow.emplace(regime.name,
                                                 noiserl::load_noise_policy(path));
  }
  if (require_all) {
    if (!bundle.frozen)
      throw std::runtime_error("bundle: missing meanflow checkpoint " +
                               cfg.paths.meanflow_ckpt);
    if (!bundle.ppo_expert)
      throw std::runtime_error("bundle: missing ppo expert checkpoint " +
                               cfg.paths.ppo_ckpt);
    for (const auto& regime : cfg.regimes)
      if (!bundle.finflow.count(regime.name))
        throw std::runtime_error("bundle: missing noise policy for regime " +
                                 regime.name);
  }
  return bundle;
}

std::unique_ptr<sim::ChunkPolicy> make_policy(const std::string& method,
                                              const sim::MarketParams& market,
                                              const std::string& regime,
                                              const AppConfig& cfg,
                                              const PolicyBundle& bundle) {
  const experts::ExpertParams ep = cfg.experts_for(market);
  if (method == "random")
    return std::make_unique<experts::RandomPolicy>(ep.delta_max, cfg.chunk);
  if (method == "as")
    return std::make_unique<experts::AsPolicy>(ep, market, cfg.chunk);
  if (method == "glft")
    return std::make_unique<experts::GlftPolicy>(ep, market, cfg.chunk);
  if (method == "glft_drift")
    return std::make_unique<experts::GlftDriftPolicy>(ep, market, cfg.chunk);
  if (method == "ppo") {
    if (!bundle.ppo_expert)
      throw std::runtime_error("method 'ppo': checkpoint not loaded");
    return std::make_unique<noiserl::NoisePolicyAgent>(*bundle.ppo_expert,
                                                       nullptr,
                                                       /*deterministic=*/true);
  }
  if (method == "meanflow") {
    if (!bundle.frozen)
      throw std::runtime_error("method 'meanflow': checkpoint not loaded");
    return std::make_unique<meanflow::MeanFlowPolicy>(*bundle.frozen);
  }
  if (method == "finflowrl") {
    if (!bundle.frozen)
      throw std::runtime_error("method 'finflowrl': frozen checkpoint missing");
    auto it = bundle.finflow.find(regime);
    if (it == bundle.finflow.end())
      throw std::runtime_error("method 'finflowrl': no noise policy for regime " +
                               regime);
    return std::make_unique<noiserl::NoisePolicyAgent>(it->second,
                                                       &*bundle.frozen,
                                                       /*deterministic=*/false);
  }
  throw std::invalid_argument("unknown method: " + method);
}

EvalDetail evaluate_policy(sim::ChunkPolicy& policy, const std::string& method,
                           const std::string& regime,
                           const sim::MarketParams& market,
                           const sim::ChunkConfig& chunk, int n_trials,
                           std::uint64_t base_seed) {
  if (n_trials < 2)
    throw std::invalid_argument("evaluate: need at least 2 trials");
  EvalDetail out;
  out.objectives.resize(static_cast<std::size_t>(n_trials));
  out.drawdowns.resize(static_cast<std::size_t>(n_trials));
  const std::uint64_t method_key = fnv1a(method);
  parallel_for(static_cast<std::size_t>(n_trials), [&](std::size_t trial) {
    const sim::EpisodeSeeds seeds{
        derive_seed(base_seed, {kStreamMarket, trial}),
        derive_seed(base_seed, {kStreamPolicy, trial, method_key})};
    const sim::EpisodeResult r = sim::run_episode(policy, market, chunk, seeds);
    out.objectives[trial] = r.objective;
    out.drawdowns[trial] = max_drawdown(r.pnl_series);
  });

  EvalRow& row = out.row;
  row.method = method;
  row.regime = regime;
  row.trials = n_trials;
  row.base_seed = base_seed;
  row.pnl_mean = mean(out.objectives);
  row.pnl_se = sample_std(out.objectives) / std::sqrt(n_trials);
  row.sharpe = sharpe_ratio(out.objectives, &row.sr_degenerate);
  row.sharpe_se = std::sqrt((1.0 + 0.5 * row.sharpe * row.sharpe) / n_trials);
  row.mdd_mean = mean(out.drawdowns);
  row.mdd_se = sample_std(out.drawdowns) / std::sqrt(n_trials);
  return out;
}

EvalDetail evaluate(const std::string& method, const RegimeSpec& regime,
                    int n_trials, std::uint64_t base_seed, const AppConfig& cfg,
                    const PolicyBundle& bundle) {
  const sim::MarketParams market = regime_market(regime, cfg.market);
  auto policy = make_policy(method, market, regime.name, cfg, bundle);
  return evaluate_policy(*policy, method, regime.name, market, cfg.chunk,
                         n_trials, base_seed);
}

const EvalDetail& BenchmarkResult::cell(const std::string& method,
                                        const std::string& regime) const {
  for (const auto& c : cells)
    if (c.row.method == method && c.row.regime == regime) return c;
  throw std::out_of_range("benchmark: no cell " + method + "/" + regime);
}

BenchmarkResult benchmark_all(const std::vector<std::string>& methods,
                              const std::vector<RegimeSpec>& regimes,
                              int n_trials, std::uint64_t base_seed,
                              const AppConfig& cfg, const PolicyBundle& bundle) {
  if (methods.empty() || regimes.empty())
    throw std::invalid_argument("benchmark: methods and regimes must be nonempty");
  BenchmarkResult out;
  for (const auto& regime : regimes)
    for (const auto& method : methods)
      out.cells.push_back(
          evaluate(method, regime, n_trials, base_seed, cfg, bundle));
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_to_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "method,regime,trials,base_seed,pnl_mean,pnl_se,sharpe,sharpe_se,"
         "sr_degenerate,mdd_mean,mdd_se\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.regime << ',' << r.trials << ',' << r.base_seed
        << ',' << fmt_double(r.pnl_mean) << ',' << fmt_double(r.pnl_se) << ','
        << fmt_double(r.sharpe) << ',' << fmt_double(r.sharpe_se) << ','
        << (r.sr_degenerate ? 1 : 0) << ',' << fmt_double(r.mdd_mean) << ','
        << fmt_double(r.mdd_se) << '\n';
  }
  return out.str();
}

std::vector<EvalRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("metrics csv: empty file");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 11)
      throw std::runtime_error("metrics csv: malformed row: " + line);
    EvalRow r;
    r.method = fields[0];
    r.regime = fields[1];
    r.trials = std::stoi(fields[2]);
    r.base_seed = std::stoull(fields[3]);
    r.pnl_mean = std::stod(fields[4]);
    r.pnl_se = std::stod(fields[5]);
    r.sharpe = std::stod(fields[6]);
    r.sharpe_se = std::stod(fields[7]);
    r.sr_degenerate = fields[8] == "1";
    r.mdd_mean = std::stod(fields[9]);
    r.mdd_se = std::stod(fields[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_metrics_csv(const std::vector<EvalRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  out << metrics_to_csv(rows);
}

std::vector<EvalRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return metrics_from_csv(text);
}

std::string format_metrics_table(const std::vector<EvalRow>& rows) {
  // Preserve first-seen order of regimes and methods.
  std::vector<std::string> regimes, methods;
  for (const auto& r : rows) {
    if (std::find(regimes.begin(), regimes.end(), r.regime) == regimes.end())
      regimes.push_back(r.regime);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  }
  std::ostringstream out;
  char buf[160];
  for (const auto& regime : regimes) {
    out << "regime " << regime << "\n";
    std::snprintf(buf, sizeof(buf), "  %-12s %12s %12s %10s %12s %12s\n",
                  "method", "PnL", "PnL_se", "SR", "MDD%", "MDD_se");
    out << buf;
    for (const auto& method : methods) {
      for (const auto& r : rows) {
        if (r.regime != regime || r.method != method) continue;
        std::snprintf(buf, sizeof(buf),
                      "  %-12s %12.4f %12.4f %10.4f%s %11.4f %12.4f\n",
                      r.method.c_str(), r.pnl_mean, r.pnl_se, r.sharpe,
                      r.sr_degenerate ? "*" : " ", r.mdd_mean, r.mdd_se);
        out << buf;
      }
    }
    out << "\n";
  }
  out << "SR marked * is degenerate (zero return std).\n";
  return out.str();
}

}  // namespace finflow::harness
