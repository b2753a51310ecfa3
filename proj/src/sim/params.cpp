#include "finflow/sim/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace finflow::sim {

namespace {
void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

double HawkesParams::branching_spectral_radius() const {
  // Perron root of the nonnegative 2x2 matrix [[aa, ab], [ba, bb]] / beta.
  const double aa = alpha_aa / beta, ab = alpha_ab / beta;
  const double ba = alpha_ba / beta, bb = alpha_bb / beta;
  const double tr = aa + bb;
  const double det = aa * bb - ab * ba;
  const double disc = tr * tr - 4.0 * det;  // >= 0 for nonnegative entries
  return 0.5 * (tr + std::sqrt(std::max(0.0, disc)));
}

void HawkesParams::stationary_rates(double& rate_a, double& rate_b) const {
  // Solve (I - K) rate = mu with K = alpha / beta.
  const double aa = alpha_aa / beta, ab = alpha_ab / beta;
  const double ba = alpha_ba / beta, bb = alpha_bb / beta;
  const double det = (1.0 - aa) * (1.0 - bb) - ab * ba;
  rate_a = ((1.0 - bb) * mu_a + ab * mu_b) / det;
  rate_b = (ba * mu_a + (1.0 - aa) * mu_b) / det;
}

void HawkesParams::validate() const {
  require(mu_a >= 0.0 && mu_b >= 0.0, "hawkes: baseline intensities must be >= 0");
  require(alpha_aa >= 0.0 && alpha_ab >= 0.0 && alpha_bb >= 0.0 && alpha_ba >= 0.0,
          "hawkes: excitation jumps must be >= 0");
  require(beta > 0.0, "hawkes: decay rate beta must be > 0");
  require(branching_spectral_radius() < 1.0,
          "hawkes: branching matrix spectral radius must be < 1");
}

void MarketParams::validate() const {
  require(sigma >= 0.0, "market: sigma must be >= 0");
  require(hurst > 0.0 && hurst < 1.0, "market: hurst must be in (0, 1)");
  require(jump_intensity >= 0.0, "market: jump_intensity must be >= 0");
  require(jump_std >= 0.0, "market: jump_std must be >= 0");
  require(dt > 0.0, "market: dt must be > 0");
  require(s0 > 0.0, "market: s0 must be > 0");
  require(horizon_steps >= 1, "market: horizon_steps must be >= 1");
  require(fill_decay > 0.0, "market: fill_decay must be > 0");
  require(inventory_penalty >= 0.0, "market: inventory_penalty must be >= 0");
  require(inventory_scale > 0.0, "market: inventory_scale must be > 0");
  // Bernoulli-per-step jump approximation is only valid for small
  // per-step firing probability.
  require(jump_intensity * dt <= 0.1,
          "market: jump_intensity * dt must be <= 0.1");
  hawkes.validate();
}

}  // namespace finflow::sim
