#pragma once

#include <cstdint>

namespace finflow::sim {

// Exponential-kernel bivariate Hawkes parameters for buy (a) and sell (b)
// order arrivals. Stability requires the branching matrix
// [[alpha_aa, alpha_ab], [alpha_ba, alpha_bb]] / beta to have spectral
// radius < 1.
struct HawkesParams {
  double mu_a = 10.0;
  double mu_b = 10.0;
  double alpha_aa = 0.8;
  double alpha_ab = 0.2;
  double alpha_bb = 0.8;
  double alpha_ba = 0.2;
  double beta = 2.0;

  double branching_spectral_radius() const;
  // Stationary mean event rates (lambda_a, lambda_b) from the branching
  // linear system lambda = mu + (alpha/beta) lambda.
  void stationary_rates(double& rate_a, double& rate_b) const;
  void validate() const;
};

// All coefficients of one market scenario: price SDE, jump law, order-flow
// kernels, fill model and discretization.
struct MarketParams {
  double mu = 0.0;             // drift per unit time
  double sigma = 0.1;          // volatility per sqrt unit time
  double hurst = 0.5;          // Hurst exponent of the driving fBm
  double jump_intensity = 1.0; // lambda_J, jumps per unit time
  double jump_mean = 0.0;      // mu_J (log scale)
  double jump_std = 0.02;      // sigma_J (log scale)
  HawkesParams hawkes;
  double fill_decay = 1.5;     // kappa: fill probability exp(-kappa * spread)
  int horizon_steps = 100;     // T
  double dt = 0.01;
  double s0 = 100.0;
  double inventory_penalty = 0.3; // c_inv in phi(I) = c_inv * I^2
  double inventory_scale = 10.0;  // observation normalization for inventory

  double horizon() const { return horizon_steps * dt; }
  double price_floor() const { return 1e-6 * s0; }
  void validate() const;
};

}  // namespace finflow::sim
