#include "finflow/noiserl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace finflow::noiserl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

GaeResult gae_advantages(const Eigen::VectorXd& rewards,
                         const Eigen::VectorXd& values, double discount,
                         double gae_lambda, double bootstrap_value) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("gae: rewards/values length mismatch");
  const Eigen::Index n = rewards.size();
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double v_next = (t == n - 1) ? bootstrap_value : values(t + 1);
    const double delta = rewards(t) + discount * v_next - values(t);
    adv = delta + discount * gae_lambda * adv;
    out.advantages(t) = adv;
    out.returns(t) = adv + values(t);
  }
  return out;
}

void prepare_buffer(RolloutBuffer& buffer, const NoisePolicy& policy,
                    double discount, double gae_lambda) {
  const int n = buffer.size();
  if (n == 0) throw std::invalid_argument("ppo: empty rollout buffer");
  const Eigen::MatrixXd values_row =
      policy.value_net.forward(policy.obs_norm.normalize_cols(buffer.obs));
  buffer.value = values_row.row(0).transpose();
  buffer.advantage.resize(n);
  buffer.ret.resize(n);
  for (std::size_t e = 0; e < buffer.episode_start.size(); ++e) {
    const int lo = buffer.episode_start[e];
    const int hi = (e + 1 < buffer.episode_start.size())
                       ? buffer.episode_start[e + 1]
                       : n;
    const GaeResult g =
        gae_advantages(buffer.reward.segment(lo, hi - lo),
                       buffer.value.segment(lo, hi - lo), discount, gae_lambda,
                       /*bootstrap_value=*/0.0);
    buffer.advantage.segment(lo, hi - lo) = g.advantages;
    buffer.ret.segment(lo, hi - lo) = g.returns;
  }
  normalize_advantages(buffer);
}

void normalize_advantages(RolloutBuffer& buffer) {
  const double mean = buffer.advantage.mean();
  buffer.advantage.array() -= mean;
  const double sd =
      std::sqrt(buffer.advantage.squaredNorm() / buffer.advantage.size());
  if (sd > 1e-12) buffer.advantage /= sd;
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoStats ppo_update(NoisePolicy& policy, RolloutBuffer& buffer,
                    const PpoConfig& cfg, net::Adam& policy_opt,
                    net::Adam& value_opt, Rng& rng) {
  if (!(cfg.clip > 0.0 && cfg.clip < 1.0))
    throw std::invalid_argument("ppo: clip must be in (0, 1)");
  const int n = buffer.size();
  if (n == 0) throw std::invalid_argument("ppo: empty rollout buffer");
  const int noise_dim = policy.cfg.noise_dim;

  const Eigen::MatrixXd obs_norm = policy.obs_norm.normalize_cols(buffer.obs);

  net::MlpGrads mean_grads, value_grads;
  mean_grads.match(policy.mean_net);
  value_grads.match(policy.value_net);
  Eigen::VectorXd log_std_grad(noise_dim);

  PpoStats stats;
  int stat_batches = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    for (int lo = 0; lo < n; lo += cfg.minibatch) {
      const int mb = std::min(cfg.minibatch, n - lo);
      Eigen::MatrixXd s(obs_norm.rows(), mb), w(noise_dim, mb);
      Eigen::VectorXd adv(mb), old_logp(mb), ret(mb);
      for (int k = 0; k < mb; ++k) {
        const int idx = order[static_cast<std::size_t>(lo + k)];
        s.col(k) = obs_norm.col(idx);
        w.col(k) = buffer.noise.col(idx);
        adv(k) = buffer.advantage(idx);
        old_logp(k) = buffer.log_prob(idx);
        ret(k) = buffer.ret(idx);
      }

      // Policy branch.
      net::Mlp::Cache mean_cache;
      const Eigen::MatrixXd mu = policy.mean_net.forward_cached(s, mean_cache);
      const Eigen::VectorXd sigma = policy.sigma();
      const Eigen::ArrayXd inv_var = 1.0 / sigma.array().square();
      const double log_sigma_sum = sigma.array().log().sum();

      Eigen::VectorXd new_logp(mb);
      for (int k = 0; k < mb; ++k) {
        const Eigen::ArrayXd z = (w.col(k) - mu.col(k)).array() / sigma.array();
        new_logp(k) = -0.5 * (z.square().sum() + noise_dim * kLog2Pi) -
                      log_sigma_sum;
      }

      double surrogate_sum = 0.0;
      int clipped_count = 0;
      Eigen::MatrixXd mu_upstream(noise_dim, mb);
      log_std_grad.setZero();
      for (int k = 0; k < mb; ++k) {
        const double ratio = std::exp(new_logp(k) - old_logp(k));
        surrogate_sum += clipped_surrogate(ratio, adv(k), cfg.clip);
        const bool clipped = (adv(k) > 0.0 && ratio > 1.0 + cfg.clip) ||
                             (adv(k) < 0.0 && ratio < 1.0 - cfg.clip);
        if (ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip) ++clipped_count;
        // d(-surrogate)/d logp = -adv * ratio on the unclipped branch.
        const double g = clipped ? 0.0 : -adv(k) * ratio / mb;
        const Eigen::ArrayXd diff = (w.col(k) - mu.col(k)).array();
        // dlogp/dmu = (w - mu) / sigma^2 ; dlogp/dlog_std = diff^2/sigma^2 - 1.
        mu_upstream.col(k) = (g * diff * inv_var).matrix();
        log_std_grad.array() += g * (diff.square() * inv_var - 1.0);
      }
      // Entropy bonus depends only on log_std: H = sum(log_std) + const.
      log_std_grad.array() -= cfg.entropy_coef;

      mean_grads.zero();
      policy.mean_net.backward(mu_upstream, mean_cache, mean_grads);

      auto policy_params = policy.mean_net.flat_params();
      policy_params.push_back({policy.log_std.data(), policy.log_std.size()});
      auto policy_grad_list = mean_grads.flat();
      policy_grad_list.push_back({log_std_grad.data(), log_std_grad.size()});
      policy_opt.step(policy_params, policy_grad_list);
      policy.log_std = policy.log_std.cwiseMax(policy.cfg.log_std_min)
                           .cwiseMin(policy.cfg.log_std_max);

      // Value branch.
      net::Mlp::Cache value_cache;
      const Eigen::MatrixXd v = policy.value_net.forward_cached(s, value_cache);
      const Eigen::MatrixXd v_err = v.row(0).transpose() - ret;
      const double value_loss = v_err.squaredNorm() / mb;
      Eigen::MatrixXd v_upstream(1, mb);
      v_upstream.row(0) = (2.0 * cfg.value_coef / mb) * v_err.transpose();
      value_grads.zero();
      policy.value_net.backward(v_upstream, value_cache, value_grads);
      value_opt.step(policy.value_net.flat_params(), value_grads.flat());

      const double surrogate = surrogate_sum / mb;
      const double entropy =
          policy.log_std.sum() + 0.5 * noise_dim * (1.0 + kLog2Pi);
      const double approx_kl = (old_logp - new_logp).mean();
      if (!std::isfinite(surrogate) || !std::isfinite(value_loss)) {
        std::ostringstream msg;
        msg << "ppo: non-finite loss (surrogate=" << surrogate
            << ", value_loss=" << value_loss << ", batch=" << mb
            << ", adv_mean=" << adv.mean() << ")";
        throw std::runtime_error(msg.str());
      }

      stats.surrogate += surrogate;
      stats.value_loss += value_loss;
      stats.entropy = entropy;
      stats.clip_fraction += static_cast<double>(clipped_count) / mb;
      stats.approx_kl += approx_kl;
      ++stat_batches;
    }
  }
  if (stat_batches > 0) {
    stats.surrogate /= stat_batches;
    stats.value_loss /= stat_batches;
    stats.clip_fraction /= stat_batches;
    stats.approx_kl /= stat_batches;
  }
  return stats;
}

}  // namespace finflow::noiserl
