#include "finflow/harness/config.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace finflow::harness {

using json = nlohmann::ordered_json;

AppConfig::AppConfig() {
  // Desk-scale defaults; the paper-scale experiment stays expressible by
  // raising pairs_per_scenario, trials and the grid axes.
  finetune.policy.hidden = {64, 64};
  ppo_expert = finetune;
  ppo_expert.iterations = 300;
  // The action-space expert starts from a sane positive quoted spread and a
  // hotter learning rate; it has no pre-trained decoder to lean on.
  ppo_expert.policy.mean_bias_init = 0.7;
  ppo_expert.ppo.lr = 1e-3;
}

void AppConfig::sync_seeds() {
  collect.seed = seed;
  train.seed = seed;
  finetune.seed = seed;
  ppo_expert.seed = derive_seed(seed, {fnv1a("ppo-expert")});
}

experts::ExpertParams AppConfig::experts_for(const sim::MarketParams& m) const {
  experts::ExpertParams p = experts;
  p.drift_estimate = drift_estimate_override.value_or(m.mu);
  return p;
}

std::string AppConfig::finflow_ckpt_path(const std::string& regime) const {
  return paths.finflow_dir + "/noise_" + regime + ".ckpt";
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
}

json market_to_json(const sim::MarketParams& m) {
  return json{{"mu", m.mu},
              {"sigma", m.sigma},
              {"hurst", m.hurst},
              {"jump_intensity", m.jump_intensity},
              {"jump_mean", m.jump_mean},
              {"jump_std", m.jump_std},
              {"hawkes",
               {{"mu_a", m.hawkes.mu_a},
                {"mu_b", m.hawkes.mu_b},
                {"alpha_aa", m.hawkes.alpha_aa},
                {"alpha_ab", m.hawkes.alpha_ab},
                {"alpha_bb", m.hawkes.alpha_bb},
                {"alpha_ba", m.hawkes.alpha_ba},
                {"beta", m.hawkes.beta}}},
              {"fill_decay", m.fill_decay},
              {"horizon_steps", m.horizon_steps},
              {"dt", m.dt},
              {"s0", m.s0},
              {"inventory_penalty", m.inventory_penalty},
              {"inventory_scale", m.inventory_scale}};
}

void market_from_json(const json& j, sim::MarketParams& m) {
  check_keys(j, {"mu", "sigma", "hurst", "jump_intensity", "jump_mean",
                 "jump_std", "hawkes", "fill_decay", "horizon_steps", "dt",
                 "s0", "inventory_penalty", "inventory_scale"},
             "market");
  m.mu = j.value("mu", m.mu);
  m.sigma = j.value("sigma", m.sigma);
  m.hurst = j.value("hurst", m.hurst);
  m.jump_intensity = j.value("jump_intensity", m.jump_intensity);
  m.jump_mean = j.value("jump_mean", m.jump_mean);
  m.jump_std = j.value("jump_std", m.jump_std);
  if (j.contains("hawkes")) {
    const json& h = j.at("hawkes");
    check_keys(h, {"mu_a", "mu_b", "alpha_aa", "alpha_ab", "alpha_bb",
                   "alpha_ba", "beta"},
               "market.hawkes");
    m.hawkes.mu_a = h.value("mu_a", m.hawkes.mu_a);
    m.hawkes.mu_b = h.value("mu_b", m.hawkes.mu_b);
    m.hawkes.alpha_aa = h.value("alpha_aa", m.hawkes.alpha_aa);
    m.hawkes.alpha_ab = h.value("alpha_ab", m.hawkes.alpha_ab);
    m.hawkes.alpha_bb = h.value("alpha_bb", m.hawkes.alpha_bb);
    m.hawkes.alpha_ba = h.value("alpha_ba", m.hawkes.alpha_ba);
    m.hawkes.beta = h.value("beta", m.hawkes.beta);
  }
  m.fill_decay = j.value("fill_decay", m.fill_decay);
  m.horizon_steps = j.value("horizon_steps", m.horizon_steps);
  m.dt = j.value("dt", m.dt);
  m.s0 = j.value("s0", m.s0);
  m.inventory_penalty = j.value("inventory_penalty", m.inventory_penalty);
  m.inventory_scale = j.value("inventory_scale", m.inventory_scale);
}

json ppo_to_json(const noiserl::FinetuneConfig& f) {
  return json{{"iterations", f.iterations},
              {"episodes_per_iter", f.episodes_per_iter},
              {"clip", f.ppo.clip},
              {"discount", f.ppo.discount},
              {"gae_lambda", f.ppo.gae_lambda},
              {"epochs", f.ppo.epochs},
              {"minibatch", f.ppo.minibatch},
              {"entropy_coef", f.ppo.entropy_coef},
              {"value_coef", f.ppo.value_coef},
              {"lr", f.ppo.lr},
              {"value_lr", f.ppo.value_lr},
              {"grad_clip", f.ppo.grad_clip},
              {"hidden", f.policy.hidden},
              {"log_std_init", f.policy.log_std_init},
              {"mean_bias_init", f.policy.mean_bias_init}};
}

void ppo_from_json(const json& j, noiserl::FinetuneConfig& f,
                   const std::string& where) {
  check_keys(j, {"iterations", "episodes_per_iter", "clip", "discount",
                 "gae_lambda", "epochs", "minibatch", "entropy_coef",
                 "value_coef", "lr", "value_lr", "grad_clip", "hidden",
                 "log_std_init", "mean_bias_init"},
             where);
  f.iterations = j.value("iterations", f.iterations);
  f.episodes_per_iter = j.value("episodes_per_iter", f.episodes_per_iter);
  f.ppo.clip = j.value("clip", f.ppo.clip);
  f.ppo.discount = j.value("discount", f.ppo.discount);
  f.ppo.gae_lambda = j.value("gae_lambda", f.ppo.gae_lambda);
  f.ppo.epochs = j.value("epochs", f.ppo.epochs);
  f.ppo.minibatch = j.value("minibatch", f.ppo.minibatch);
  f.ppo.entropy_coef = j.value("entropy_coef", f.ppo.entropy_coef);
  f.ppo.value_coef = j.value("value_coef", f.ppo.value_coef);
  f.ppo.lr = j.value("lr", f.ppo.lr);
  f.ppo.value_lr = j.value("value_lr", f.ppo.value_lr);
  f.ppo.grad_clip = j.value("grad_clip", f.ppo.grad_clip);
  f.policy.hidden = j.value("hidden", f.policy.hidden);
  f.policy.log_std_init = j.value("log_std_init", f.policy.log_std_init);
  f.policy.mean_bias_init = j.value("mean_bias_init", f.policy.mean_bias_init);
}

}  // namespace

std::string config_to_json(const AppConfig& cfg) {
  json j;
  j["format_version"] = AppConfig::kFormatVersion;
  j["seed"] = cfg.seed;
  j["chunk"] = {{"t_obs", cfg.chunk.t_obs},
                {"t_pred", cfg.chunk.t_pred},
                {"t_exec", cfg.chunk.t_exec}};
  j["market"] = market_to_json(cfg.market);
  j["experts"] = {{"gamma_risk", cfg.experts.gamma_risk},
                  {"fill_scale", cfg.experts.fill_scale},
                  {"delta_max", cfg.experts.delta_max},
                  {"drift_tau_ref", cfg.experts.drift_tau_ref}};
  if (cfg.drift_estimate_override)
    j["experts"]["drift_estimate"] = *cfg.drift_estimate_override;
  j["grid"] = {{"volatility", cfg.grid.volatility},
               {"arrival_rate", cfg.grid.arrival_rate},
               {"jump_intensity", cfg.grid.jump_intensity}};
  if (!cfg.grid.hurst.empty()) j["grid"]["hurst"] = cfg.grid.hurst;
  j["regimes"] = json::array();
  for (const auto& r : cfg.regimes)
    j["regimes"].push_back({{"name", r.name},
                            {"sigma", r.sigma},
                            {"arrival_rate", r.arrival_rate},
                            {"hurst", r.hurst},
                            {"drift", r.drift}});
  j["collect"] = {{"experts", cfg.collect.experts},
                  {"pairs_per_scenario", cfg.collect.pairs_per_scenario},
                  {"selection_episodes", cfg.collect.selection_episodes}};
  j["meanflow"] = {{"hidden", cfg.meanflow_net.hidden},
                   {"cond_hidden", cfg.meanflow_net.cond_hidden},
                   {"activation", net::activation_name(cfg.meanflow_net.activation)},
                   {"spread_clip", cfg.meanflow_net.spread_clip},
                   {"steps", cfg.train.steps},
                   {"batch", cfg.train.batch},
                   {"lr", cfg.train.lr},
                   {"grad_clip", cfg.train.grad_clip},
                   {"p_eq", cfg.train.p_eq},
                   {"log_every", cfg.train.log_every}};
  j["finetune"] = ppo_to_json(cfg.finetune);
  j["ppo_expert"] = ppo_to_json(cfg.ppo_expert);
  j["eval"] = {{"trials", cfg.eval_trials}, {"base_seed", cfg.eval_seed}};
  j["paths"] = {{"dataset", cfg.paths.dataset},
                {"meanflow_ckpt", cfg.paths.meanflow_ckpt},
                {"ppo_ckpt", cfg.paths.ppo_ckpt},
                {"finflow_dir", cfg.paths.finflow_dir},
                {"report_dir", cfg.paths.report_dir}};
  return j.dump(2) + "\n";
}

AppConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  check_keys(j, {"format_version", "seed", "chunk", "market", "experts", "grid",
                 "regimes", "collect", "meanflow", "finetune", "ppo_expert",
                 "eval", "paths"},
             "config root");
  if (!j.contains("format_version"))
    throw std::invalid_argument("config: missing format_version");
  if (j.at("format_version").get<int>() != AppConfig::kFormatVersion)
    throw std::invalid_argument("config: unsupported format_version");

  AppConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("chunk")) {
    const json& c = j.at("chunk");
    check_keys(c, {"t_obs", "t_pred", "t_exec"}, "chunk");
    cfg.chunk.t_obs = c.value("t_obs", cfg.chunk.t_obs);
    cfg.chunk.t_pred = c.value("t_pred", cfg.chunk.t_pred);
    cfg.chunk.t_exec = c.value("t_exec", cfg.chunk.t_exec);
  }
  if (j.contains("market")) market_from_json(j.at("market"), cfg.market);
  if (j.contains("experts")) {
    const json& e = j.at("experts");
    check_keys(e, {"gamma_risk", "fill_scale", "delta_max", "drift_tau_ref",
                   "drift_estimate"},
               "experts");
    cfg.experts.gamma_risk = e.value("gamma_risk", cfg.experts.gamma_risk);
    cfg.experts.fill_scale = e.value("fill_scale", cfg.experts.fill_scale);
    cfg.experts.delta_max = e.value("delta_max", cfg.experts.delta_max);
    cfg.experts.drift_tau_ref = e.value("drift_tau_ref", cfg.experts.drift_tau_ref);
    if (e.contains("drift_estimate"))
      cfg.drift_estimate_override = e.at("drift_estimate").get<double>();
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"volatility", "arrival_rate", "jump_intensity", "hurst"},
               "grid");
    cfg.grid.volatility = g.value("volatility", cfg.grid.volatility);
    cfg.grid.arrival_rate = g.value("arrival_rate", cfg.grid.arrival_rate);
    cfg.grid.jump_intensity = g.value("jump_intensity", cfg.grid.jump_intensity);
    cfg.grid.hurst = g.value("hurst", cfg.grid.hurst);
  }
  if (j.contains("regimes")) {
    cfg.regimes.clear();
    for (const json& r : j.at("regimes")) {
      check_keys(r, {"name", "sigma", "arrival_rate", "hurst", "drift"},
                 "regimes[]");
      RegimeSpec spec;
      spec.name = r.at("name").get<std::string>();
      spec.sigma = r.value("sigma", spec.sigma);
      spec.arrival_rate = r.value("arrival_rate", spec.arrival_rate);
      spec.hurst = r.value("hurst", spec.hurst);
      spec.drift = r.value("drift", spec.drift);
      cfg.regimes.push_back(std::move(spec));
    }
  }
  if (j.contains("collect")) {
    const json& c = j.at("collect");
    check_keys(c, {"experts", "pairs_per_scenario", "selection_episodes"},
               "collect");
    cfg.collect.experts = c.value("experts", cfg.collect.experts);
    cfg.collect.pairs_per_scenario =
        c.value("pairs_per_scenario", cfg.collect.pairs_per_scenario);
    cfg.collect.selection_episodes =
        c.value("selection_episodes", cfg.collect.selection_episodes);
  }
  if (j.contains("meanflow")) {
    const json& m = j.at("meanflow");
    check_keys(m, {"hidden", "cond_hidden", "activation", "spread_clip",
                   "steps", "batch", "lr", "grad_clip", "p_eq", "log_every"},
               "meanflow");
    cfg.meanflow_net.hidden = m.value("hidden", cfg.meanflow_net.hidden);
    cfg.meanflow_net.cond_hidden =
        m.value("cond_hidden", cfg.meanflow_net.cond_hidden);
    if (m.contains("activation"))
      cfg.meanflow_net.activation =
          net::activation_from_name(m.at("activation").get<std::string>());
    cfg.meanflow_net.spread_clip =
        m.value("spread_clip", cfg.meanflow_net.spread_clip);
    cfg.train.steps = m.value("steps", cfg.train.steps);
    cfg.train.batch = m.value("batch", cfg.train.batch);
    cfg.train.lr = m.value("lr", cfg.train.lr);
    cfg.train.grad_clip = m.value("grad_clip", cfg.train.grad_clip);
    cfg.train.p_eq = m.value("p_eq", cfg.train.p_eq);
    cfg.train.log_every = m.value("log_every", cfg.train.log_every);
  }
  if (j.contains("finetune")) ppo_from_json(j.at("finetune"), cfg.finetune, "finetune");
  if (j.contains("ppo_expert"))
    ppo_from_json(j.at("ppo_expert"), cfg.ppo_expert, "ppo_expert");
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, {"trials", "base_seed"}, "eval");
    cfg.eval_trials = e.value("trials", cfg.eval_trials);
    cfg.eval_seed = e.value("base_seed", cfg.eval_seed);
  }
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    check_keys(p, {"dataset", "meanflow_ckpt", "ppo_ckpt", "finflow_dir",
                   "report_dir"},
               "paths");
    cfg.paths.dataset = p.value("dataset", cfg.paths.dataset);
    cfg.paths.meanflow_ckpt = p.value("meanflow_ckpt", cfg.paths.meanflow_ckpt);
    cfg.paths.ppo_ckpt = p.value("ppo_ckpt", cfg.paths.ppo_ckpt);
    cfg.paths.finflow_dir = p.value("finflow_dir", cfg.paths.finflow_dir);
    cfg.paths.report_dir = p.value("report_dir", cfg.paths.report_dir);
  }

  cfg.chunk.validate();
  cfg.market.validate();
  cfg.experts.validate();
  cfg.sync_seeds();
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const AppConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << config_to_json(cfg);
}

}  // namespace finflow::harness
