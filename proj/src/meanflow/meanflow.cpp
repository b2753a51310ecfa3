#include "finflow/meanflow/meanflow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "finflow/digest.hpp"
#include "finflow/parallel.hpp"

namespace finflow::meanflow {

MeanFlowNet MeanFlowNet::make(const MeanFlowConfig& cfg, Rng& rng) {
  cfg.chunk.validate();
  MeanFlowNet net;
  net.cfg = cfg;
  net.body = net::ConditionedMlp::make(cfg.action_dim(), cfg.obs_dim, cfg.hidden,
                                       cfg.cond_hidden, cfg.activation, rng);
  net.obs_norm = Normalizer::identity(cfg.obs_dim);
  net.act_norm = Normalizer::identity(cfg.action_dim());
  return net;
}

std::string MeanFlowNet::config_hash() const {
  Sha256 h;
  h.update_str("finflow-meanflow-v1");
  h.update_u64(static_cast<std::uint64_t>(cfg.chunk.t_obs));
  h.update_u64(static_cast<std::uint64_t>(cfg.chunk.t_pred));
  h.update_u64(static_cast<std::uint64_t>(cfg.chunk.t_exec));
  h.update_u64(static_cast<std::uint64_t>(cfg.obs_dim));
  h.update_u64(cfg.hidden.size());
  for (int w : cfg.hidden) h.update_u64(static_cast<std::uint64_t>(w));
  h.update_u64(static_cast<std::uint64_t>(cfg.cond_hidden));
  h.update_str(net::activation_name(cfg.activation));
  h.update_f64(cfg.spread_clip);
  return h.finish_hex();
}

std::string MeanFlowNet::param_hash() const {
  Sha256 h;
  for (const auto& p : body.flat_params())
    for (Eigen::Index i = 0; i < p.size; ++i) h.update_f64(p.data[i]);
  for (const auto* n : {&obs_norm, &act_norm}) {
    for (Eigen::Index i = 0; i < n->mean.size(); ++i) h.update_f64(n->mean(i));
    for (Eigen::Index i = 0; i < n->std.size(); ++i) h.update_f64(n->std(i));
  }
  return h.finish_hex();
}

Eigen::MatrixXd interpolant(const Eigen::MatrixXd& z0, const Eigen::MatrixXd& a,
                            const Eigen::VectorXd& t) {
  if (z0.rows() != a.rows() || z0.cols() != a.cols() || z0.cols() != t.size())
    throw std::invalid_argument("interpolant: shape mismatch");
  if ((t.array() < 0.0).any() || (t.array() > 1.0).any())
    throw std::invalid_argument("interpolant: t must be in [0, 1]");
  Eigen::MatrixXd z = z0;
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    z.col(c) = (1.0 - t(c)) * z0.col(c) + t(c) * a.col(c);
  return z;
}

std::pair<double, double> sample_times(Rng& rng, double p_eq) {
  const double t = rng.uniform();
  if (rng.uniform() < p_eq) return {t, t};
  return {rng.uniform() * t, t};
}

Eigen::MatrixXd meanflow_target(const MeanFlowNet& net, const Eigen::MatrixXd& z_t,
                                const Eigen::VectorXd& r, const Eigen::VectorXd& t,
                                const Eigen::MatrixXd& s, const Eigen::MatrixXd& v,
                                Eigen::MatrixXd* u_pred,
                                net::ConditionedMlp::Cache* cache) {
  const Eigen::Index batch = z_t.cols();
  Eigen::MatrixXd y, dy;
  net.body.jvp(z_t, r, t, s, v, Eigen::VectorXd::Zero(batch),
               Eigen::VectorXd::Ones(batch), Eigen::MatrixXd::Zero(s.rows(), batch),
               y, dy, cache);
  Eigen::MatrixXd target = v;
  for (Eigen::Index c = 0; c < batch; ++c)
    target.col(c) -= (t(c) - r(c)) * dy.col(c);
  if (u_pred) *u_pred = std::move(y);
  return target;
}

namespace {

double mse_and_upstream(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                        Eigen::MatrixXd* upstream) {
  const Eigen::MatrixXd diff = pred - target;
  const double loss = diff.colwise().squaredNorm().mean();
  if (upstream) *upstream = (2.0 / diff.cols()) * diff;
  return loss;
}

}  // namespace

double meanflow_loss(const MeanFlowNet& net, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, Rng& rng,
                     net::ConditionedMlpGrads* grads, double p_eq) {
  const Eigen::Index batch = states.cols();
  if (batch == 0) throw std::invalid_argument("meanflow_loss: empty batch");
  if (actions.cols() != batch)
    throw std::invalid_argument("meanflow_loss: state/action count mismatch");

  const Eigen::MatrixXd s = net.obs_norm.normalize_cols(states);
  const Eigen::MatrixXd a = net.act_norm.normalize_cols(actions);

  Eigen::MatrixXd z0(a.rows(), batch);
  for (Eigen::Index c = 0; c < batch; ++c)
    for (Eigen::Index i = 0; i < a.rows(); ++i) z0(i, c) = rng.normal();
  Eigen::VectorXd r(batch), t(batch);
  for (Eigen::Index c = 0; c < batch; ++c) {
    auto [rr, tt] = sample_times(rng, p_eq);
    r(c) = rr;
    t(c) = tt;
  }

  // The network's flow time runs data -> noise: the state at time t is
  // interpolant(z0, a, 1 - t), pure noise at t = 1 and the expert action at
  // t = 0, with straight-line velocity z0 - a. One-step generation
  // a = z1 - u(z1, 0, 1, s) then queries the network exactly on the noise
  // distribution it was trained on.
  const Eigen::MatrixXd z_t =
      interpolant(z0, a, (1.0 - t.array()).matrix());
  const Eigen::MatrixXd v = z0 - a;

  Eigen::MatrixXd u_pred;
  net::ConditionedMlp::Cache cache;
  const Eigen::MatrixXd target =
      meanflow_target(net, z_t, r, t, s, v, &u_pred, grads ? &cache : nullptr);

  Eigen::MatrixXd upstream;
  const double loss = mse_and_upstream(u_pred, target, grads ? &upstream : nullptr);
  if (!std::isfinite(loss)) {
    Eigen::Index bad = 0;
    for (Eigen::Index c = 0; c < batch; ++c)
      if (!u_pred.col(c).allFinite() || !target.col(c).allFinite()) {
        bad = c;
        break;
      }
    std::ostringstream msg;
    msg << "meanflow_loss: non-finite loss at sample " << bad << " (r=" << r(bad)
        << ", t=" << t(bad) << ")";
    throw std::runtime_error(msg.str());
  }
  if (grads) net.body.backward(upstream, cache, *grads);
  return loss;
}

double meanflow_loss_fixed_target(const MeanFlowNet& net,
                                  const Eigen::MatrixXd& z_t,
                                  const Eigen::VectorXd& r,
                                  const Eigen::VectorXd& t,
                                  const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& u_target,
                                  net::ConditionedMlpGrads* grads) {
  Eigen::MatrixXd y, dy;
  net::ConditionedMlp::Cache cache;
  const Eigen::Index batch = z_t.cols();
  // Tangent is irrelevant here; reuse jvp to share the cached primal path.
  net.body.jvp(z_t, r, t, s, Eigen::MatrixXd::Zero(z_t.rows(), batch),
               Eigen::VectorXd::Zero(batch), Eigen::VectorXd::Zero(batch),
               Eigen::MatrixXd::Zero(s.rows(), batch), y, dy,
               grads ? &cache : nullptr);
  Eigen::MatrixXd upstream;
  const double loss = mse_and_upstream(y, u_target, grads ? &upstream : nullptr);
  if (grads) net.body.backward(upstream, cache, *grads);
  return loss;
}

sim::ActionChunk generate(const MeanFlowNet& net, const Eigen::VectorXd& obs_flat,
                          const Eigen::VectorXd& z1) {
  if (z1.size() != net.cfg.action_dim())
    throw std::invalid_argument("generate: z1 has wrong dimension");
  if (obs_flat.size() != net.cfg.obs_dim)
    throw std::invalid_argument("generate: observation has wrong dimension");
  const Eigen::VectorXd s = net.obs_norm.normalize(obs_flat);
  const Eigen::MatrixXd u =
      net.body.forward(z1, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), s);
  Eigen::VectorXd a_norm = z1 - u.col(0);
  Eigen::VectorXd a = net.act_norm.denormalize(a_norm);
  a = a.cwiseMax(0.0).cwiseMin(net.cfg.spread_clip);
  return sim::ActionChunk::from_flat(a);
}

sim::ActionChunk generate(const MeanFlowNet& net, const Eigen::VectorXd& obs_flat,
                          Rng& rng) {
  Eigen::VectorXd z1(net.cfg.action_dim());
  for (Eigen::Index i = 0; i < z1.size(); ++i) z1(i) = rng.normal();
  return generate(net, obs_flat, z1);
}

TrainStats train_meanflow(MeanFlowNet& net, const DemoDataset& data,
                          const TrainConfig& cfg, const std::string& curve_path) {
  if (data.records.empty()) throw std::invalid_argument("train: empty dataset");
  const Eigen::Index n = static_cast<Eigen::Index>(data.records.size());
  Eigen::MatrixXd states(data.obs_dim, n);
  Eigen::MatrixXd actions(data.records.front().action.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = data.records[static_cast<std::size_t>(i)].state;
    actions.col(i) = data.records[static_cast<std::size_t>(i)].action;
  }

  Rng rng(derive_seed(cfg.seed, {fnv1a("train-meanflow")}));
  net::Adam opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.grad_clip});
  net::ConditionedMlpGrads grads;
  grads.match(net.body);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainStats stats;
  const int batch = std::min<int>(cfg.batch, static_cast<int>(n));
  Eigen::MatrixXd bs(states.rows(), batch), ba(actions.rows(), batch);
  for (int step = 0; step < cfg.steps; ++step) {
    for (int k = 0; k < batch; ++k) {
      if (cursor == order.size()) {
        // Fisher-Yates reshuffle once per epoch.
        for (std::size_t i = order.size(); i > 1; --i) {
          const std::size_t j =
              static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
          std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        cursor = 0;
      }
      const Eigen::Index idx = order[cursor++];
      bs.col(k) = states.col(idx);
      ba.col(k) = actions.col(idx);
    }
    grads.zero();
    const double loss = meanflow_loss(net, bs, ba, rng, &grads, cfg.p_eq);
    opt.step(net.body.flat_params(), grads.flat());

    if (step == 0) stats.initial_loss = loss;
    stats.final_loss = loss;
    if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step == cfg.steps - 1))
      stats.curve.emplace_back(step, loss);
  }

  if (!curve_path.empty()) {
    std::ofstream out(curve_path, std::ios::trunc);
    if (!out) throw std::runtime_error("train: cannot write " + curve_path);
    out << "step loss\n";
    char line[64];
    for (const auto& [step, loss] : stats.curve) {
      std::snprintf(line, sizeof(line), "%d %.9g\n", step, loss);
      out << line;
    }
  }
  return stats;
}

MeanFlowNet pretrain_from_dataset(const DemoDataset& data,
                                  const MeanFlowConfig& net_cfg,
                                  const TrainConfig& train_cfg,
                                  const std::string& curve_path) {
  MeanFlowConfig cfg = net_cfg;
  cfg.chunk = data.chunk;
  cfg.obs_dim = data.obs_dim;
  Rng init_rng(derive_seed(train_cfg.seed, {fnv1a("meanflow-init")}));
  MeanFlowNet net = MeanFlowNet::make(cfg, init_rng);
  net.obs_norm = data.obs_norm;
  net.act_norm = data.act_norm;
  train_meanflow(net, data, train_cfg, curve_path);
  return net;
}

namespace {

// Captures the (observation, planned chunk) stream of the wrapped policy.
class RecordingPolicy : public sim::ChunkPolicy {
 public:
  explicit RecordingPolicy(sim::ChunkPolicy& inner) : inner_(inner) {}
  sim::ActionChunk plan(const sim::Observation& obs, Rng& rng) override {
    sim::ActionChunk chunk = inner_.plan(obs, rng);
    states.push_back(obs.flatten());
    actions.push_back(chunk.flatten());
    return chunk;
  }
  std::string name() const override { return inner_.name(); }

  std::vector<Eigen::VectorXd> states, actions;

 private:
  sim::ChunkPolicy& inner_;
};

}  // namespace

DemoDataset collect_demonstrations(const std::vector<ScenarioSpec>& scenarios,
                                   const ExpertFactory& factory,
                                   const sim::ChunkConfig& chunk,
                                   const CollectConfig& cfg) {
  if (scenarios.empty())
    throw std::invalid_argument("collect: scenario list is empty");
  if (cfg.experts.empty())
    throw std::invalid_argument("collect: expert list is empty");

  DemoDataset data;
  data.chunk = chunk;
  data.expert_names = cfg.experts;
  data.scenarios.resize(scenarios.size());
  std::vector<std::vector<DemoRecord>> per_scenario(scenarios.size());

  parallel_for(scenarios.size(), [&](std::size_t si) {
    const ScenarioSpec& spec = scenarios[si];
    // Expert selection: every expert sees the same seeded markets.
    double best_mean = 0.0;
    std::size_t best = 0;
    bool any_finite = false;
    for (std::size_t e = 0; e < cfg.experts.size(); ++e) {
      auto policy = factory(cfg.experts[e], spec.market);
      double sum = 0.0;
      for (int ep = 0; ep < cfg.selection_episodes; ++ep) {
        const std::uint64_t market =
            derive_seed(cfg.seed, {fnv1a("collect-select"), si,
                                   static_cast<std::uint64_t>(ep)});
        const sim::EpisodeSeeds seeds{
            market, derive_seed(market, {kStreamPolicy, fnv1a(cfg.experts[e])})};
        sum += sim::run_episode(*policy, spec.market, chunk, seeds).objective;
      }
      const double mean = sum / cfg.selection_episodes;
      if (std::isfinite(mean) && (!any_finite || mean > best_mean)) {
        any_finite = true;
        best_mean = mean;
        best = e;
      }
    }
    if (!any_finite)
      throw std::runtime_error("collect: no expert produced a finite objective");

    data.scenarios[si].name = spec.name;
    data.scenarios[si].market = spec.market;
    data.scenarios[si].winner = cfg.experts[best];
    data.scenarios[si].winner_objective = best_mean;

    // Fresh rollouts of the winner generate the demonstrations.
    auto winner = factory(cfg.experts[best], spec.market);
    std::vector<DemoRecord>& out = per_scenario[si];
    for (int ep = 0; static_cast<int>(out.size()) < cfg.pairs_per_scenario; ++ep) {
      RecordingPolicy recorder(*winner);
      const std::uint64_t market = derive_seed(
          cfg.seed, {fnv1a("collect-demo"), si, static_cast<std::uint64_t>(ep)});
      const sim::EpisodeSeeds seeds{
          market, derive_seed(market, {kStreamPolicy, fnv1a(cfg.experts[best])})};
      sim::run_episode(recorder, spec.market, chunk, seeds);
      for (std::size_t k = 0;
           k < recorder.states.size() &&
           static_cast<int>(out.size()) < cfg.pairs_per_scenario;
           ++k) {
        DemoRecord rec;
        rec.scenario_id = static_cast<std::uint32_t>(si);
        rec.expert_id = static_cast<std::uint32_t>(best);
        rec.state = recorder.states[k];
        rec.action = recorder.actions[k];
        out.push_back(std::move(rec));
      }
    }
  });

  for (auto& bucket : per_scenario)
    for (auto& rec : bucket) data.records.push_back(std::move(rec));
  data.obs_dim = static_cast<int>(data.records.front().state.size());
  data.fit_normalizers();
  return data;
}

}  // namespace finflow::meanflow
