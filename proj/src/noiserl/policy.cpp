#include "finflow/noiserl/policy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "finflow/digest.hpp"

namespace finflow::noiserl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::uint32_t kMagic = 0x4b434646;  // "FFCK", same container
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindNoisePolicy = 1;
}  // namespace

NoisePolicy NoisePolicy::make(const NoisePolicyConfig& cfg, Rng& rng) {
  NoisePolicy p;
  p.cfg = cfg;
  p.mean_net = net::Mlp::make(cfg.obs_dim, cfg.hidden, cfg.noise_dim,
                              cfg.activation, rng);
  p.mean_net.layers.back().w.setZero();
  p.mean_net.layers.back().b.setConstant(cfg.mean_bias_init);
  p.value_net = net::Mlp::make(cfg.obs_dim, cfg.hidden, 1, cfg.activation, rng);
  p.value_net.layers.back().w *= 0.01;
  p.log_std = Eigen::VectorXd::Constant(cfg.noise_dim, cfg.log_std_init);
  p.obs_norm = meanflow::Normalizer::identity(cfg.obs_dim);
  return p;
}

Eigen::VectorXd NoisePolicy::mean(const Eigen::VectorXd& obs_flat) const {
  return mean_net.forward(Eigen::VectorXd(obs_norm.normalize(obs_flat)));
}

double NoisePolicy::value(const Eigen::VectorXd& obs_flat) const {
  return value_net.forward(Eigen::VectorXd(obs_norm.normalize(obs_flat)))(0);
}

std::string NoisePolicy::config_hash() const {
  Sha256 h;
  h.update_str("finflow-noise-policy-v1");
  h.update_u64(static_cast<std::uint64_t>(cfg.obs_dim));
  h.update_u64(static_cast<std::uint64_t>(cfg.noise_dim));
  h.update_u64(cfg.hidden.size());
  for (int w : cfg.hidden) h.update_u64(static_cast<std::uint64_t>(w));
  h.update_str(net::activation_name(cfg.activation));
  h.update_f64(cfg.log_std_min);
  h.update_f64(cfg.log_std_max);
  h.update_f64(cfg.mean_bias_init);
  h.update_u64(decoder == DecoderKind::MeanFlow ? 0 : 1);
  h.update_f64(identity_clip);
  h.update_str(frozen_config_hash);
  return h.finish_hex();
}

std::string NoisePolicy::param_hash() const {
  Sha256 h;
  for (const auto& p : mean_net.flat_params())
    for (Eigen::Index i = 0; i < p.size; ++i) h.update_f64(p.data[i]);
  for (const auto& p : value_net.flat_params())
    for (Eigen::Index i = 0; i < p.size; ++i) h.update_f64(p.data[i]);
  for (Eigen::Index i = 0; i < log_std.size(); ++i) h.update_f64(log_std(i));
  return h.finish_hex();
}

std::pair<Eigen::VectorXd, double> sample_noise(const NoisePolicy& policy,
                                                const Eigen::VectorXd& obs_flat,
                                                Rng& rng) {
  const Eigen::VectorXd mu = policy.mean(obs_flat);
  const Eigen::VectorXd sigma = policy.sigma();
  Eigen::VectorXd w(mu.size());
  double log_prob = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double eps = rng.normal();
    w(i) = mu(i) + sigma(i) * eps;
    log_prob += -0.5 * (eps * eps + kLog2Pi) - std::log(sigma(i));
  }
  return {std::move(w), log_prob};
}

double noise_log_prob(const NoisePolicy& policy, const Eigen::VectorXd& obs_flat,
                      const Eigen::VectorXd& w) {
  const Eigen::VectorXd mu = policy.mean(obs_flat);
  const Eigen::VectorXd sigma = policy.sigma();
  double log_prob = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double z = (w(i) - mu(i)) / sigma(i);
    log_prob += -0.5 * (z * z + kLog2Pi) - std::log(sigma(i));
  }
  return log_prob;
}

sim::ActionChunk decode(const meanflow::MeanFlowNet& frozen,
                        const Eigen::VectorXd& obs_flat,
                        const Eigen::VectorXd& w) {
  return meanflow::generate(frozen, obs_flat, w);
}

sim::ActionChunk decode_identity(const NoisePolicy& policy,
                                 const Eigen::VectorXd& w) {
  Eigen::VectorXd a = w.cwiseMax(0.0).cwiseMin(policy.identity_clip);
  return sim::ActionChunk::from_flat(a);
}

sim::ActionChunk NoisePolicyAgent::plan(const sim::Observation& obs, Rng& rng) {
  const Eigen::VectorXd s = obs.flatten();
  Eigen::VectorXd w;
  double log_prob;
  if (deterministic_) {
    w = policy_.mean(s);
    log_prob = noise_log_prob(policy_, s, w);
  } else {
    std::tie(w, log_prob) = sample_noise(policy_, s, rng);
  }
  if (recording_) {
    recorded_obs.push_back(s);
    recorded_noise.push_back(w);
    recorded_log_prob.push_back(log_prob);
  }
  if (policy_.decoder == DecoderKind::MeanFlow) return decode(*frozen_, s, w);
  return decode_identity(policy_, w);
}

void save_noise_policy(const NoisePolicy& policy, const std::string& path) {
  std::ostringstream buf(std::ios::binary);
  BinWriter w(buf);
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(kKindNoisePolicy);
  w.u32(static_cast<std::uint32_t>(policy.cfg.obs_dim));
  w.u32(static_cast<std::uint32_t>(policy.cfg.noise_dim));
  w.u64(policy.cfg.hidden.size());
  for (int h : policy.cfg.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.str(net::activation_name(policy.cfg.activation));
  w.f64(policy.cfg.log_std_init);
  w.f64(policy.cfg.log_std_min);
  w.f64(policy.cfg.log_std_max);
  w.f64(policy.cfg.mean_bias_init);
  w.u32(policy.decoder == DecoderKind::MeanFlow ? 0u : 1u);
  w.f64(policy.identity_clip);
  w.str(policy.frozen_config_hash);
  w.str(policy.config_hash());
  meanflow::detail::write_mlp(w, policy.mean_net);
  meanflow::detail::write_mlp(w, policy.value_net);
  w.eigen(policy.log_std);
  meanflow::detail::write_normalizer(w, policy.obs_norm);
  meanflow::detail::write_hashed_file(path, buf.str());
}

NoisePolicy load_noise_policy(const std::string& path) {
  const std::string body = meanflow::detail::read_hashed_file(path);
  std::istringstream in(body, std::ios::binary);
  BinReader r(in);
  if (r.u32() != kMagic) throw std::runtime_error("policy checkpoint: bad magic");
  if (r.u32() != kVersion)
    throw std::runtime_error("policy checkpoint: unsupported version");
  if (r.u32() != kKindNoisePolicy)
    throw std::runtime_error("policy checkpoint: not a noise policy");
  NoisePolicy p;
  p.cfg.obs_dim = static_cast<int>(r.u32());
  p.cfg.noise_dim = static_cast<int>(r.u32());
  p.cfg.hidden.resize(r.u64());
  for (auto& h : p.cfg.hidden) h = static_cast<int>(r.u32());
  p.cfg.activation = net::activation_from_name(r.str());
  p.cfg.log_std_init = r.f64();
  p.cfg.log_std_min = r.f64();
  p.cfg.log_std_max = r.f64();
  p.cfg.mean_bias_init = r.f64();
  p.decoder = r.u32() == 0 ? DecoderKind::MeanFlow : DecoderKind::Identity;
  p.identity_clip = r.f64();
  p.frozen_config_hash = r.str();
  const std::string stored_hash = r.str();
  p.mean_net = meanflow::detail::read_mlp(r);
  p.value_net = meanflow::detail::read_mlp(r);
  p.log_std = r.eigen();
  p.obs_norm = meanflow::detail::read_normalizer(r);
  if (p.config_hash() != stored_hash)
    throw std::runtime_error("policy checkpoint: config hash mismatch");
  return p;
}

}  // namespace finflow::noiserl
