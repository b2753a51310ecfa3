#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finflow/meanflow/dataset.hpp"
#include "finflow/meanflow/normalizer.hpp"
#include "finflow/net/adam.hpp"
#include "finflow/net/film.hpp"
#include "finflow/rng.hpp"
#include "finflow/sim/simulator.hpp"

namespace finflow::meanflow {

struct MeanFlowConfig {
  sim::ChunkConfig chunk;
  int obs_dim = sim::Observation::dim(2);
  std::vector<int> hidden = {128, 128, 128};
  int cond_hidden = 64;
  net::Activation activation = net::Activation::Silu;
  double spread_clip = 5.0;  // generated spreads clamped to [0, spread_clip]

  int action_dim() const { return 2 * chunk.t_pred; }
};

// The average-velocity network u(z, r, t, s) together with the frozen
// normalization statistics it was trained under.
struct MeanFlowNet {
  MeanFlowConfig cfg;
  net::ConditionedMlp body;
  Normalizer obs_norm, act_norm;

  static MeanFlowNet make(const MeanFlowConfig& cfg, Rng& rng);

  std::size_t param_count() const { return body.param_count(); }
  // Identifies the architecture (dims, activations, chunk shape).
  std::string config_hash() const;
  // Hash over parameters and normalization stats; pins the freeze contract.
  std::string param_hash() const;
};

// Linear interpolation z_t = (1 - t) z0 + t a, column-batched.
Eigen::MatrixXd interpolant(const Eigen::MatrixXd& z0, const Eigen::MatrixXd& a,
                            const Eigen::VectorXd& t);

// t ~ U(0,1); with probability p_eq, r = t, else r ~ U(0, t).
std::pair<double, double> sample_times(Rng& rng, double p_eq = 0.25);

// Average-velocity regression target
//   u_target = v - (t - r) * (v . d_z u + d_t u)
// computed in one forward-mode pass with tangents (dz = v, dr = 0, dt = 1,
// ds = 0). The result is detached: gradients never flow through it. When
// u_pred/cache are provided the primal pass is exposed for a reverse step.
Eigen::MatrixXd meanflow_target(const MeanFlowNet& net, const Eigen::MatrixXd& z_t,
                                const Eigen::VectorXd& r, const Eigen::VectorXd& t,
                                const Eigen::MatrixXd& s, const Eigen::MatrixXd& v,
                                Eigen::MatrixXd* u_pred = nullptr,
                                net::ConditionedMlp::Cache* cache = nullptr);

// Mean over the batch of |u_pred - sg(u_target)|^2. States/actions are raw;
// normalization happens inside. When grads is non-null the gradient of the
// loss (prediction branch only) is accumulated.
double meanflow_loss(const MeanFlowNet& net, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, Rng& rng,
                     net::ConditionedMlpGrads* grads = nullptr,
                     double p_eq = 0.25);

// Same loss/backward with a caller-supplied detached target (the target
// branch is not recomputed). Used to pin the stop-gradient contract.
double meanflow_loss_fixed_target(const MeanFlowNet& net,
                                  const Eigen::MatrixXd& z_t,
                                  const Eigen::VectorXd& r,
                                  const Eigen::VectorXd& t,
                                  const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& u_target,
                                  net::ConditionedMlpGrads* grads = nullptr);

// One-step generation a = z1 - u(z1, 0, 1, s); z1 lives in the normalized
// action space. The result is denormalized and clamped to valid spreads.
sim::ActionChunk generate(const MeanFlowNet& net,
                          const Eigen::VectorXd& obs_flat,
                          const Eigen::VectorXd& z1);
// Draws z1 ~ N(0, I) from rng (row-major chunk order).
sim::ActionChunk generate(const MeanFlowNet& net,
                          const Eigen::VectorXd& obs_flat, Rng& rng);

struct TrainConfig {
  int steps = 8000;
  int batch = 256;
  double lr = 3e-4;
  double grad_clip = 1.0;
  double p_eq = 0.25;
  std::uint64_t seed = 1;
  int log_every = 100;
};

struct TrainStats {
  std::vector<std::pair<int, double>> curve;  // (step, minibatch loss)
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Minibatch training of the average-velocity objective with Adam.
TrainStats train_meanflow(MeanFlowNet& net, const DemoDataset& data,
                          const TrainConfig& cfg,
                          const std::string& curve_path = "");

// Builds net + normalization stats from the dataset and trains it.
MeanFlowNet pretrain_from_dataset(const DemoDataset& data,
                                  const MeanFlowConfig& net_cfg,
                                  const TrainConfig& train_cfg,
                                  const std::string& curve_path = "");

// Samples chunks by drawing standard normal noise through the network.
class MeanFlowPolicy : public sim::ChunkPolicy {
 public:
  explicit MeanFlowPolicy(const MeanFlowNet& net) : net_(net) {}
  sim::ActionChunk plan(const sim::Observation& obs, Rng& rng) override {
    return generate(net_, obs.flatten(), rng);
  }
  std::string name() const override { return "meanflow"; }

 private:
  const MeanFlowNet& net_;
};

struct ScenarioSpec {
  std::string name;
  sim::MarketParams market;
};

using ExpertFactory = std::function<std::unique_ptr<sim::ChunkPolicy>(
    const std::string& expert, const sim::MarketParams& market)>;

struct CollectConfig {
  std::vector<std::string> experts = {"as", "glft", "glft_drift"};
  int pairs_per_scenario = 2000;
  int selection_episodes = 200;
  std::uint64_t seed = 1;
};

// For each scenario, evaluates every expert over paired seeded episodes,
// picks the best mean objective (ties: lower list index), then rolls the
// winner on fresh seeds recording (observation, planned chunk) pairs.
DemoDataset collect_demonstrations(const std::vector<ScenarioSpec>& scenarios,
                                   const ExpertFactory& factory,
                                   const sim::ChunkConfig& chunk,
                                   const CollectConfig& cfg);

}  // namespace finflow::meanflow
