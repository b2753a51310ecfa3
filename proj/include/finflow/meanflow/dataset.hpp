#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "finflow/meanflow/normalizer.hpp"
#include "finflow/sim/params.hpp"
#include "finflow/sim/types.hpp"

namespace finflow::meanflow {

// One expert demonstration: the flattened observation at a decision point and
// the expert's planned chunk for the next t_pred steps (raw spreads).
struct DemoRecord {
  std::uint32_t scenario_id = 0;
  std::uint32_t expert_id = 0;
  Eigen::VectorXd state;
  Eigen::VectorXd action;
};

struct ScenarioInfo {
  std::string name;
  sim::MarketParams market;
  std::string winner;           // expert selected for this scenario
  double winner_objective = 0;  // its mean objective during selection
};

// Demonstration dataset with frozen normalization statistics. The on-disk
// layout is a versioned binary format closed by a SHA-256 of the payload;
// see docs/FORMATS.md.
struct DemoDataset {
  static constexpr std::uint32_t kFormatVersion = 1;

  sim::ChunkConfig chunk;
  int obs_dim = 0;
  std::vector<std::string> expert_names;
  std::vector<ScenarioInfo> scenarios;
  Normalizer obs_norm, act_norm;
  std::vector<DemoRecord> records;

  std::size_t size() const { return records.size(); }

  // Recomputes normalization statistics from the stored records.
  void fit_normalizers();

  std::string content_hash() const;
  void save(const std::string& path) const;
  static DemoDataset load(const std::string& path);
};

}  // namespace finflow::meanflow
