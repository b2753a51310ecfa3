#pragma once

#include <utility>

#include "finflow/rng.hpp"
#include "finflow/sim/params.hpp"

namespace finflow::sim {

enum class OrderSide { Buy, Sell };

// Running exponentially-decayed excitation sums of the four kernels.
// exc_xy is the contribution to side x's intensity from past side-y events,
// already decayed to last_update.
struct HawkesState {
  double exc_aa = 0.0;
  double exc_ab = 0.0;
  double exc_bb = 0.0;
  double exc_ba = 0.0;
  double last_update = 0.0;
};

// Decays all excitation sums to time t (t >= last_update).
void decay_to(HawkesState& state, const HawkesParams& params, double t);

// (lambda_a, lambda_b) at time t without mutating state.
std::pair<double, double> hawkes_intensities(const HawkesState& state,
                                             const HawkesParams& params,
                                             double t);

// Excitation bump for one accepted event: a buy adds alpha_aa to exc_aa and
// alpha_ba to exc_ba; a sell adds alpha_bb to exc_bb and alpha_ab to exc_ab.
void apply_event_excitation(HawkesState& state, const HawkesParams& params,
                            OrderSide side);

struct HawkesStepResult {
  int n_buy = 0;
  int n_sell = 0;
};

// Samples arrivals on [state.last_update, state.last_update + dt) by Ogata
// thinning. Between events the total intensity only decays, so the intensity
// at the current time is a valid upper bound until the next accepted event.
// Leaves the state decayed to the interval end.
HawkesStepResult simulate_hawkes_step(HawkesState& state,
                                      const HawkesParams& params, double dt,
                                      Rng& rng);

}  // namespace finflow::sim
