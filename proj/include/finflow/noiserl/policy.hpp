#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "finflow/meanflow/checkpoint.hpp"
#include "finflow/meanflow/meanflow.hpp"
#include "finflow/net/mlp.hpp"
#include "finflow/rng.hpp"
#include "finflow/sim/simulator.hpp"

namespace finflow::noiserl {

struct NoisePolicyConfig {
  int obs_dim = sim::Observation::dim(2);
  int noise_dim = 16;
  std::vector<int> hidden = {64, 64};
  net::Activation activation = net::Activation::Tanh;
  double log_std_init = 0.0;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  // Initial output bias of the mean head. Zero keeps the noise policy at the
  // frozen sampler's behavior; the identity-decoder expert starts from a
  // positive quoted spread instead of the zero-spread origin.
  double mean_bias_init = 0.0;
};

enum class DecoderKind { MeanFlow, Identity };

// Gaussian policy over the decoder's input noise: w ~ N(mu(s), diag(sigma^2))
// with a state-independent diagonal covariance, plus a value head for PPO.
struct NoisePolicy {
  NoisePolicyConfig cfg;
  net::Mlp mean_net;
  net::Mlp value_net;
  Eigen::VectorXd log_std;
  meanflow::Normalizer obs_norm;  // applied before both heads
  DecoderKind decoder = DecoderKind::MeanFlow;
  double identity_clip = 5.0;           // chunk clamp for the identity decoder
  std::string frozen_config_hash;       // binds a MeanFlow decoder checkpoint

  // mean_net's last layer starts at zero and log_std at log_std_init, so the
  // initial policy reproduces the frozen sampler's standard normal draws.
  static NoisePolicy make(const NoisePolicyConfig& cfg, Rng& rng);

  Eigen::VectorXd mean(const Eigen::VectorXd& obs_flat) const;
  Eigen::VectorXd sigma() const {
    return log_std.cwiseMax(cfg.log_std_min).cwiseMin(cfg.log_std_max)
        .array().exp();
  }
  double value(const Eigen::VectorXd& obs_flat) const;

  std::size_t trainable_param_count() const {
    return mean_net.param_count() + value_net.param_count() +
           static_cast<std::size_t>(log_std.size());
  }
  std::string config_hash() const;
  std::string param_hash() const;
};

// w = mu(s) + sigma .* eps with exact diagonal-Gaussian log density.
std::pair<Eigen::VectorXd, double> sample_noise(const NoisePolicy& policy,
                                                const Eigen::VectorXd& obs_flat,
                                                Rng& rng);

double noise_log_prob(const NoisePolicy& policy, const Eigen::VectorXd& obs_flat,
                      const Eigen::VectorXd& w);

// Frozen-decoder mapping: identical to meanflow::generate with z1 = w.
sim::ActionChunk decode(const meanflow::MeanFlowNet& frozen,
                        const Eigen::VectorXd& obs_flat,
                        const Eigen::VectorXd& w);

// Identity decoder of the action-space PPO expert: the noise vector is the
// chunk, clamped to valid spreads.
sim::ActionChunk decode_identity(const NoisePolicy& policy,
                                 const Eigen::VectorXd& w);

// Policy wrapper driving episodes. With a MeanFlow decoder this is the
// fine-tuned agent; with the identity decoder it is the vanilla PPO expert.
// Optionally records (obs, w, log_prob) at every decision for PPO rollouts.
class NoisePolicyAgent : public sim::ChunkPolicy {
 public:
  NoisePolicyAgent(const NoisePolicy& policy, const meanflow::MeanFlowNet* frozen,
                   bool deterministic)
      : policy_(policy), frozen_(frozen), deterministic_(deterministic) {
    if (policy.decoder == DecoderKind::MeanFlow) {
      if (!frozen)
        throw std::invalid_argument("noise policy agent: missing frozen decoder");
      if (policy.frozen_config_hash != frozen->config_hash())
        throw std::runtime_error(
            "noise policy agent: frozen decoder config hash mismatch");
    }
  }

  sim::ActionChunk plan(const sim::Observation& obs, Rng& rng) override;
  std::string name() const override {
    return policy_.decoder == DecoderKind::MeanFlow ? "finflowrl" : "ppo";
  }

  void enable_recording() { recording_ = true; }
  std::vector<Eigen::VectorXd> recorded_obs, recorded_noise;
  std::vector<double> recorded_log_prob;

 private:
  const NoisePolicy& policy_;
  const meanflow::MeanFlowNet* frozen_;
  bool deterministic_;
  bool recording_ = false;
};

void save_noise_policy(const NoisePolicy& policy, const std::string& path);
NoisePolicy load_noise_policy(const std::string& path);

}  // namespace finflow::noiserl
