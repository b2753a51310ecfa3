#pragma once

#include <string>

#include "finflow/sim/types.hpp"

namespace finflow::harness {

// Columnar per-step dump (t, S_t, I_t, W_t, spreads, fills) for debugging and
// plotting.
std::string episode_to_csv(const sim::EpisodeTrace& trace);
void write_episode_csv(const sim::EpisodeTrace& trace, const std::string& path);

}  // namespace finflow::harness
