#pragma once

#include <Eigen/Core>
#include <vector>

#include "finflow/net/adam.hpp"
#include "finflow/noiserl/policy.hpp"
#include "finflow/rng.hpp"

namespace finflow::noiserl {

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// Generalized advantage estimation over one episode:
//   delta_t = r_t + discount * V_{t+1} - V_t (V_T = bootstrap)
//   A_t = delta_t + discount * lambda * A_{t+1}, returns = A + V.
GaeResult gae_advantages(const Eigen::VectorXd& rewards,
                         const Eigen::VectorXd& values, double discount,
                         double gae_lambda, double bootstrap_value);

// Flat on-policy buffer across decision points, with episode offsets so GAE
// never crosses an episode boundary.
struct RolloutBuffer {
  Eigen::MatrixXd obs;    // obs_dim x n
  Eigen::MatrixXd noise;  // noise_dim x n
  Eigen::VectorXd log_prob;
  Eigen::VectorXd reward;
  Eigen::VectorXd value;
  Eigen::VectorXd advantage;
  Eigen::VectorXd ret;
  std::vector<int> episode_start;  // ascending offsets into the flat arrays

  int size() const { return static_cast<int>(log_prob.size()); }
};

// Fills value (via the policy's value head), advantage and ret; advantages
// are then normalized buffer-wide to mean 0, std 1.
void prepare_buffer(RolloutBuffer& buffer, const NoisePolicy& policy,
                    double discount, double gae_lambda);

void normalize_advantages(RolloutBuffer& buffer);

// Per-sample clipped surrogate min(ratio * adv, clip(ratio, 1 +/- eps) * adv).
double clipped_surrogate(double ratio, double advantage, double clip_eps);

struct PpoConfig {
  double clip = 0.2;
  double discount = 1.0;   // episodic, finite horizon
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch = 256;
  double entropy_coef = 1e-3;
  double value_coef = 0.5;
  double lr = 3e-4;
  double value_lr = 1e-3;
  double grad_clip = 1.0;
};

struct PpoStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Maximizes the clipped surrogate plus entropy bonus and fits the value head.
// Throws on a non-finite loss with buffer diagnostics.
PpoStats ppo_update(NoisePolicy& policy, RolloutBuffer& buffer,
                    const PpoConfig& cfg, net::Adam& policy_opt,
                    net::Adam& value_opt, Rng& rng);

}  // namespace finflow::noiserl
