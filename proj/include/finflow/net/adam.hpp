#pragma once

#include <Eigen/Core>
#include <vector>

#include "finflow/net/mlp.hpp"

namespace finflow::net {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables clipping
};

// Adaptive-moment optimizer over a flat list of parameter tensors. Moment
// buffers are keyed by position, so the tensor list must be stable across
// steps.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  void step(const std::vector<ParamView>& params,
            const std::vector<GradView>& grads);

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

}  // namespace finflow::net
