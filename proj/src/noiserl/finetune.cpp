#include "finflow/noiserl/finetune.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "finflow/parallel.hpp"

namespace finflow::noiserl {

namespace {

struct EpisodeRollout {
  std::vector<Eigen::VectorXd> obs;
  std::vector<Eigen::VectorXd> noise;
  std::vector<double> log_prob;
  std::vector<double> reward;  // per decision
  double objective = 0.0;
};

// Runs one seeded episode with a recording agent and aggregates the executed
// sub-chunk rewards per decision point.
//
// The policy-gradient reward removes the action-independent martingale part
// of the wealth change, I * (dS - E[dS]): expectations (and the optimal
// policy) are unchanged, while gradient noise no longer carries the price
// risk of held inventory. What remains per step is spread earnings plus the
// predictable drift on inventory minus the running penalty; the terminal
// adjustment still swaps the accumulated running penalty for the terminal
// one. E[dS | S] uses the unconditional drift, exact for H = 0.5.
EpisodeRollout collect_episode(const NoisePolicy& policy,
                               const meanflow::MeanFlowNet* frozen,
                               const sim::MarketParams& market,
                               const sim::ChunkConfig& chunk,
                               sim::EpisodeSeeds seeds) {
  NoisePolicyAgent agent(policy, frozen, /*deterministic=*/false);
  agent.enable_recording();
  sim::EpisodeTrace trace;
  const sim::EpisodeResult result =
      sim::run_episode(agent, market, chunk, seeds, &trace);

  EpisodeRollout rollout;
  rollout.obs = std::move(agent.recorded_obs);
  rollout.noise = std::move(agent.recorded_noise);
  rollout.log_prob = std::move(agent.recorded_log_prob);
  rollout.objective = result.objective;
  const int decisions = static_cast<int>(rollout.obs.size());
  rollout.reward.assign(decisions, 0.0);

  const double drift_per_step =
      market.mu * market.dt +
      market.jump_intensity * market.dt *
          (std::exp(market.jump_mean + 0.5 * market.jump_std * market.jump_std) -
           1.0);
  const int steps = static_cast<int>(trace.bid_spread.size());
  double running_penalty = 0.0;
  for (int t = 0; t < steps; ++t) {
    const double earnings =
        trace.bid_fills[t] * trace.bid_spread[t] +
        trace.ask_fills[t] * trace.ask_spread[t];
    const double inv = trace.inventory[t + 1];
    const double penalty = market.inventory_penalty * market.dt * inv * inv;
    running_penalty += penalty;
    double reward = earnings + inv * trace.mid[t] * drift_per_step - penalty;
    if (t == steps - 1)
      reward += running_penalty - market.inventory_penalty * inv * inv;
    rollout.reward[std::min(t / chunk.t_exec, decisions - 1)] += reward;
  }
  return rollout;
}

FinetuneResult run_training(const meanflow::MeanFlowNet* frozen,
                            const std::vector<sim::MarketParams>& markets,
                            const sim::ChunkConfig& chunk,
                            const FinetuneConfig& cfg,
                            const std::string& curve_path,
                            const std::string& agent_tag) {
  if (markets.empty())
    throw std::invalid_argument("finetune: no market scenarios given");
  for (const auto& m : markets) m.validate();

  NoisePolicyConfig pcfg = cfg.policy;
  pcfg.noise_dim = 2 * chunk.t_pred;
  pcfg.obs_dim = sim::Observation::dim(chunk.t_obs);
  // The noise policy must start exactly at the frozen sampler's behavior;
  // a spread prior only makes sense for the identity decoder.
  if (frozen) pcfg.mean_bias_init = 0.0;
  Rng init_rng(derive_seed(cfg.seed, {fnv1a("noise-policy-init")}));
  NoisePolicy policy = NoisePolicy::make(pcfg, init_rng);
  std::string frozen_hash_before;
  if (frozen) {
    policy.decoder = DecoderKind::MeanFlow;
    policy.obs_norm = frozen->obs_norm;
    policy.frozen_config_hash = frozen->config_hash();
    frozen_hash_before = frozen->param_hash();
  } else {
    policy.decoder = DecoderKind::Identity;
  }

  net::Adam policy_opt({cfg.ppo.lr, 0.9, 0.999, 1e-8, cfg.ppo.grad_clip});
  net::Adam value_opt({cfg.ppo.value_lr, 0.9, 0.999, 1e-8, cfg.ppo.grad_clip});
  Rng update_rng(derive_seed(cfg.seed, {fnv1a("ppo-update")}));

  FinetuneResult out;
  out.curve.reserve(cfg.iterations);
  std::unique_ptr<DivergenceGuard> guard;

  std::ofstream curve;
  if (!curve_path.empty()) {
    curve.open(curve_path, std::ios::trunc);
    if (!curve) throw std::runtime_error("finetune: cannot write " + curve_path);
    curve << "iter mean_objective surrogate value_loss clip_fraction approx_kl "
             "entropy\n";
  }

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<EpisodeRollout> rollouts(cfg.episodes_per_iter);
    parallel_for(static_cast<std::size_t>(cfg.episodes_per_iter), [&](std::size_t e) {
      const sim::MarketParams& market =
          markets[(static_cast<std::size_t>(iter) * cfg.episodes_per_iter + e) %
                  markets.size()];
      const std::uint64_t market_seed = derive_seed(
          cfg.seed, {fnv1a("rollout"), static_cast<std::uint64_t>(iter), e});
      const sim::EpisodeSeeds seeds{
          market_seed, derive_seed(market_seed, {kStreamPolicy, fnv1a(agent_tag)})};
      rollouts[e] = collect_episode(policy, frozen, market, chunk, seeds);
    });

    int total = 0;
    double objective_sum = 0.0;
    for (const auto& r : rollouts) {
      total += static_cast<int>(r.obs.size());
      objective_sum += r.objective;
    }
    RolloutBuffer buffer;
    buffer.obs.resize(pcfg.obs_dim, total);
    buffer.noise.resize(pcfg.noise_dim, total);
    buffer.log_prob.resize(total);
    buffer.reward.resize(total);
    int at = 0;
    for (const auto& r : rollouts) {
      buffer.episode_start.push_back(at);
      for (std::size_t k = 0; k < r.obs.size(); ++k, ++at) {
        buffer.obs.col(at) = r.obs[k];
        buffer.noise.col(at) = r.noise[k];
        buffer.log_prob(at) = r.log_prob[k];
        buffer.reward(at) = r.reward[k];
      }
    }

    const double mean_objective = objective_sum / cfg.episodes_per_iter;
    if (iter == 0) {
      out.baseline_objective = mean_objective;
      guard = std::make_unique<DivergenceGuard>(mean_objective);
    }

    prepare_buffer(buffer, policy, cfg.ppo.discount, cfg.ppo.gae_lambda);
    const PpoStats stats =
        ppo_update(policy, buffer, cfg.ppo, policy_opt, value_opt, update_rng);

    out.curve.push_back({iter, mean_objective, stats});
    if (curve.is_open()) {
      char line[160];
      std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.6g %.6g %.9g\n",
                    iter, mean_objective, stats.surrogate, stats.value_loss,
                    stats.clip_fraction, stats.approx_kl, stats.entropy);
      curve << line;
    }

    if (guard->update(mean_objective)) {
      out.halted_divergence = true;
      break;
    }
  }

  if (frozen && frozen->param_hash() != frozen_hash_before)
    throw std::runtime_error("finetune: frozen decoder parameters changed");

  out.policy = std::move(policy);
  return out;
}

}  // namespace

FinetuneResult fine_tune(const meanflow::MeanFlowNet& frozen,
                         const std::vector<sim::MarketParams>& markets,
                         const FinetuneConfig& cfg,
                         const std::string& curve_path) {
  return run_training(&frozen, markets, frozen.cfg.chunk, cfg, curve_path,
                      "finflowrl");
}

FinetuneResult train_ppo_expert(const std::vector<sim::MarketParams>& markets,
                                const sim::ChunkConfig& chunk,
                                const FinetuneConfig& cfg,
                                const std::string& curve_path) {
  return run_training(nullptr, markets, chunk, cfg, curve_path, "ppo");
}

}  // namespace finflow::noiserl
