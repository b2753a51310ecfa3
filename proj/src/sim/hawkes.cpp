#include "finflow/sim/hawkes.hpp"

#include <cmath>
#include <stdexcept>

namespace finflow::sim {

void decay_to(HawkesState& state, const HawkesParams& params, double t) {
  if (t < state.last_update)
    throw std::invalid_argument("hawkes: time must not run backwards");
  const double decay = std::exp(-params.beta * (t - state.last_update));
  state.exc_aa *= decay;
  state.exc_ab *= decay;
  state.exc_bb *= decay;
  state.exc_ba *= decay;
  state.last_update = t;
}

std::pair<double, double> hawkes_intensities(const HawkesState& state,
                                             const HawkesParams& params,
                                             double t) {
  if (t < state.last_update)
    throw std::invalid_argument("hawkes: time must not run backwards");
  const double decay = std::exp(-params.beta * (t - state.last_update));
  const double lambda_a = params.mu_a + (state.exc_aa + state.exc_ab) * decay;
  const double lambda_b = params.mu_b + (state.exc_bb + state.exc_ba) * decay;
  return {lambda_a, lambda_b};
}

void apply_event_excitation(HawkesState& state, const HawkesParams& params,
                            OrderSide side) {
  if (side == OrderSide::Buy) {
    state.exc_aa += params.alpha_aa;
    state.exc_ba += params.alpha_ba;
  } else {
    state.exc_bb += params.alpha_bb;
    state.exc_ab += params.alpha_ab;
  }
}

HawkesStepResult simulate_hawkes_step(HawkesState& state,
                                      const HawkesParams& params, double dt,
                                      Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("hawkes: dt must be > 0");
  HawkesStepResult result;
  const double t_end = state.last_update + dt;
  double t = state.last_update;
  while (true) {
    auto [lambda_a, lambda_b] = hawkes_intensities(state, params, t);
    const double bound = lambda_a + lambda_b;
    if (bound <= 0.0) break;
    t += rng.exponential(bound);
    if (t >= t_end) break;
    decay_to(state, params, t);
    auto [la, lb] = hawkes_intensities(state, params, t);
    const double u = rng.uniform() * bound;
    if (u < la) {
      ++result.n_buy;
      apply_event_excitation(state, params, OrderSide::Buy);
    } else if (u < la + lb) {
      ++result.n_sell;
      apply_event_excitation(state, params, OrderSide::Sell);
    }
    // else thinned: candidate rejected, intensities keep decaying
  }
  decay_to(state, params, t_end);
  return result;
}

}  // namespace finflow::sim
