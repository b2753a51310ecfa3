#include "finflow/sim/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace finflow::sim {

void ChunkConfig::validate() const {
  if (t_obs < 1) throw std::invalid_argument("chunk: t_obs must be >= 1");
  if (t_pred < 1) throw std::invalid_argument("chunk: t_pred must be >= 1");
  if (t_exec < 1 || t_exec > t_pred)
    throw std::invalid_argument("chunk: need 1 <= t_exec <= t_pred");
}

Eigen::VectorXd ActionChunk::flatten() const {
  Eigen::VectorXd v(2 * spreads.rows());
  for (Eigen::Index k = 0; k < spreads.rows(); ++k) {
    v(2 * k) = spreads(k, 0);
    v(2 * k + 1) = spreads(k, 1);
  }
  return v;
}

ActionChunk ActionChunk::from_flat(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() % 2 != 0)
    throw std::invalid_argument("action chunk: flat size must be even");
  ActionChunk chunk;
  chunk.spreads.resize(v.size() / 2, 2);
  for (Eigen::Index k = 0; k < chunk.spreads.rows(); ++k) {
    chunk.spreads(k, 0) = v(2 * k);
    chunk.spreads(k, 1) = v(2 * k + 1);
  }
  return chunk;
}

Eigen::VectorXd Observation::flatten() const {
  const int t_obs = static_cast<int>(window.size());
  Eigen::VectorXd v(dim(t_obs));
  int at = 0;
  for (const StepFeatures& f : window) {
    v(at++) = f.log_return;
    v(at++) = f.norm_inventory;
    v(at++) = f.norm_time_left;
    v(at++) = f.buy_intensity;
    v(at++) = f.sell_intensity;
    v(at++) = f.bid_fill;
    v(at++) = f.ask_fill;
  }
  v(at++) = static_cast<double>(inventory);
  v(at++) = elapsed_fraction();
  return v.cwiseMax(-10.0).cwiseMin(10.0);
}

}  // namespace finflow::sim
