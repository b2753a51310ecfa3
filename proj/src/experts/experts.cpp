#include "finflow/experts/experts.hpp"

#include <cmath>
#include <stdexcept>

namespace finflow::experts {

void ExpertParams::validate() const {
  if (!(gamma_risk > 0.0))
    throw std::invalid_argument("experts: gamma_risk must be > 0");
  if (!(fill_scale > 0.0))
    throw std::invalid_argument("experts: fill_scale must be > 0");
  if (!(delta_max >= 0.0))
    throw std::invalid_argument("experts: delta_max must be >= 0");
}

namespace {

sim::ActionChunk clamped_chunk(Eigen::MatrixX2d spreads) {
  sim::ActionChunk chunk;
  chunk.spreads = spreads.cwiseMax(0.0);
  return chunk;
}

}  // namespace

sim::ActionChunk as_quotes(const sim::Observation& obs, const ExpertParams& params,
                           const sim::MarketParams& market,
                           const sim::ChunkConfig& cfg) {
  const double gamma = params.gamma_risk;
  const double kappa = market.fill_decay;
  const double sigma2 = market.sigma * market.sigma;
  const double inv = static_cast<double>(obs.inventory);
  const double base_spread = (2.0 / gamma) * std::log1p(gamma / kappa);

  Eigen::MatrixX2d rows(cfg.t_pred, 2);
  for (int k = 0; k < cfg.t_pred; ++k) {
    const double tau =
        std::max(0.0, (obs.horizon_steps - obs.step_index - k) * obs.dt);
    const double reservation_offset = -inv * gamma * sigma2 * tau;
    const double spread = gamma * sigma2 * tau + base_spread;
    rows(k, 0) = 0.5 * spread - reservation_offset;
    rows(k, 1) = 0.5 * spread + reservation_offset;
  }
  return clamped_chunk(rows);
}

void glft_coefficients(const ExpertParams& params, const sim::MarketParams& market,
                       double& c1, double& c2) {
  const double gamma = params.gamma_risk;
  const double kappa = market.fill_decay;
  const double sigma2 = market.sigma * market.sigma;
  const double base = (1.0 / gamma) * std::log1p(gamma / kappa);
  // Asymptotic inventory-skew unit: sqrt(gamma sigma^2 / (2 kappa A)
  // * (1 + gamma/kappa)^{1 + kappa/gamma}).
  const double skew =
      std::sqrt(gamma * sigma2 / (2.0 * kappa * params.fill_scale) *
                std::pow(1.0 + gamma / kappa, 1.0 + kappa / gamma));
  c1 = base + 0.5 * skew;
  c2 = skew;
}

sim::ActionChunk glft_quotes(const sim::Observation& obs, const ExpertParams& params,
                             const sim::MarketParams& market,
                             const sim::ChunkConfig& cfg) {
  double c1, c2;
  glft_coefficients(params, market, c1, c2);
  const double inv = static_cast<double>(obs.inventory);
  Eigen::MatrixX2d rows(cfg.t_pred, 2);
  rows.col(0).setConstant(c1 + c2 * inv);
  rows.col(1).setConstant(c1 - c2 * inv);
  return clamped_chunk(rows);
}

sim::ActionChunk glft_drift_quotes(const sim::Observation& obs,
                                   const ExpertParams& params,
                                   const sim::MarketParams& market,
                                   const sim::ChunkConfig& cfg) {
  sim::ActionChunk chunk = glft_quotes(obs, params, market, cfg);
  const double shift = params.drift_estimate * params.drift_tau_ref;
  if (shift != 0.0) {
    chunk.spreads.col(0).array() += shift;
    chunk.spreads.col(1).array() -= shift;
    chunk.spreads = chunk.spreads.cwiseMax(0.0);
  }
  return chunk;
}

sim::ActionChunk random_quotes(const sim::ChunkConfig& cfg, double delta_max,
                               Rng& rng) {
  sim::ActionChunk chunk;
  chunk.spreads.resize(cfg.t_pred, 2);
  for (int k = 0; k < cfg.t_pred; ++k) {
    chunk.spreads(k, 0) = delta_max * rng.uniform();
    chunk.spreads(k, 1) = delta_max * rng.uniform();
  }
  return chunk;
}

}  // namespace finflow::experts
