#include "finflow/harness/episode_dump.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finflow::harness {

std::string episode_to_csv(const sim::EpisodeTrace& trace) {
  std::ostringstream out;
  out << "t,mid,inventory,wealth,bid_spread,ask_spread,bid_fills,ask_fills,"
         "reward\n";
  char line[256];
  // Row 0 is the initial state; per-step quantities start at t=1.
  std::snprintf(line, sizeof(line), "0,%.17g,%.17g,%.17g,,,,,\n", trace.mid[0],
                trace.inventory[0], trace.wealth[0]);
  out << line;
  for (std::size_t t = 0; t < trace.bid_spread.size(); ++t) {
    std::snprintf(line, sizeof(line),
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g\n", t + 1,
                  trace.mid[t + 1], trace.inventory[t + 1], trace.wealth[t + 1],
                  trace.bid_spread[t], trace.ask_spread[t], trace.bid_fills[t],
                  trace.ask_fills[t], trace.rewards[t]);
    out << line;
  }
  return out.str();
}

void write_episode_csv(const sim::EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("episode dump: cannot write " + path);
  out << episode_to_csv(trace);
}

}  // namespace finflow::harness
