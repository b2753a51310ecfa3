#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "finflow/experts/experts.hpp"
#include "finflow/meanflow/checkpoint.hpp"
#include "finflow/meanflow/meanflow.hpp"

using namespace finflow;
using namespace finflow::meanflow;

namespace {

MeanFlowConfig tiny_config() {
  MeanFlowConfig cfg;
  cfg.chunk = sim::ChunkConfig{2, 8, 4};
  cfg.obs_dim = sim::Observation::dim(2);
  cfg.hidden = {32, 32};
  cfg.cond_hidden = 16;
  return cfg;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

MeanFlowNet random_net(Rng& rng, double film_scale = 0.2) {
  MeanFlowNet net = MeanFlowNet::make(tiny_config(), rng);
  for (auto& f : net.body.films)
    f.conditioner.layers.back().w =
        random_matrix(f.conditioner.layers.back().w.rows(),
                      f.conditioner.layers.back().w.cols(), rng) *
        film_scale;
  for (auto& l : net.body.trunk)
    l.w += 0.05 * random_matrix(l.w.rows(), l.w.cols(), rng);
  return net;
}

meanflow::ScenarioSpec quiet_scenario(const char* name, double sigma) {
  sim::MarketParams m;
  m.sigma = sigma;
  m.jump_intensity = 0.5;
  return {name, m};
}

ExpertFactory closed_form_factory(const sim::ChunkConfig& chunk) {
  return [chunk](const std::string& expert, const sim::MarketParams& market)
             -> std::unique_ptr<sim::ChunkPolicy> {
    experts::ExpertParams p;
    if (expert == "as")
      return std::make_unique<experts::AsPolicy>(p, market, chunk);
    if (expert == "glft")
      return std::make_unique<experts::GlftPolicy>(p, market, chunk);
    if (expert == "glft_drift")
      return std::make_unique<experts::GlftDriftPolicy>(p, market, chunk);
    if (expert == "random")
      return std::make_unique<experts::RandomPolicy>(p.delta_max, chunk);
    throw std::invalid_argument("unknown expert " + expert);
  };
}

}  // namespace

TEST_CASE("interpolant endpoints and midpoint") {
  Rng rng(1);
  const Eigen::MatrixXd z0 = random_matrix(6, 3, rng);
  const Eigen::MatrixXd a = random_matrix(6, 3, rng);
  CHECK((interpolant(z0, a, Eigen::VectorXd::Zero(3)) - z0).norm() == 0.0);
  CHECK((interpolant(z0, a, Eigen::VectorXd::Ones(3)) - a).norm() == 0.0);
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(6, 1);
  const Eigen::MatrixXd twos = Eigen::MatrixXd::Constant(6, 1, 2.0);
  const Eigen::MatrixXd mid =
      interpolant(zeros, twos, Eigen::VectorXd::Constant(1, 0.5));
  CHECK((mid - Eigen::MatrixXd::Ones(6, 1)).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(interpolant(z0, a, Eigen::VectorXd::Constant(3, 1.5)),
                  std::invalid_argument);
}

TEST_CASE("sample_times: range contract and r=t mass") {
  Rng rng(2);
  int eq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto [r, t] = sample_times(rng);
    CHECK(r >= 0.0);
    CHECK(t <= 1.0);
    CHECK(r <= t);
    if (r == t) ++eq;
  }
  CHECK(static_cast<double>(eq) / n == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("meanflow_target: r=t reduces to v") {
  Rng rng(3);
  MeanFlowNet net = random_net(rng);
  const int batch = 4;
  const Eigen::MatrixXd z = random_matrix(net.cfg.action_dim(), batch, rng);
  const Eigen::MatrixXd s = random_matrix(net.cfg.obs_dim, batch, rng);
  const Eigen::MatrixXd v = random_matrix(net.cfg.action_dim(), batch, rng);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(batch, 0.6);
  const Eigen::MatrixXd target = meanflow_target(net, z, t, t, s, v);
  CHECK((target - v).norm() == doctest::Approx(0.0));
}

TEST_CASE("meanflow_target: constant network gives v") {
  Rng rng(4);
  MeanFlowNet net = MeanFlowNet::make(tiny_config(), rng);
  for (auto& l : net.body.trunk) {
    l.w.setZero();
    l.b.setZero();
  }
  net.body.trunk.back().b.setConstant(0.37);  // u == const vector
  const int batch = 3;
  const Eigen::MatrixXd z = random_matrix(net.cfg.action_dim(), batch, rng);
  const Eigen::MatrixXd s = random_matrix(net.cfg.obs_dim, batch, rng);
  const Eigen::MatrixXd v = random_matrix(net.cfg.action_dim(), batch, rng);
  Eigen::VectorXd r(batch), t(batch);
  r << 0.0, 0.2, 0.9;
  t << 0.5, 0.8, 0.95;
  const Eigen::MatrixXd target = meanflow_target(net, z, r, t, s, v);
  CHECK((target - v).norm() < 1e-12);
}

TEST_CASE("meanflow_loss: zero-velocity batch on a zero net has zero loss") {
  Rng rng(5);
  MeanFlowNet net = MeanFlowNet::make(tiny_config(), rng);
  for (auto& l : net.body.trunk) {
    l.w.setZero();
    l.b.setZero();
  }
  // With actions == normalized 0 and noise z0, v = a - z0 = -z0... instead
  // feed states/actions so that normalized action equals the drawn noise:
  // easiest exact-zero case is v = 0, obtained when a == z0. Freeze stats to
  // identity and use zero actions with a zero-noise rng stand-in: drawing is
  // internal, so instead check loss >= 0 and the fixed-target variant hits 0.
  const int batch = 8;
  const Eigen::MatrixXd s = Eigen::MatrixXd::Zero(net.cfg.obs_dim, batch);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(net.cfg.action_dim(), batch);
  Rng loss_rng(6);
  const double loss = meanflow_loss(net, s, a, loss_rng);
  CHECK(loss >= 0.0);

  // Prediction equals target exactly: u == 0 and target == 0.
  const Eigen::MatrixXd z = random_matrix(net.cfg.action_dim(), batch, rng);
  const Eigen::VectorXd r = Eigen::VectorXd::Zero(batch);
  const Eigen::VectorXd t = Eigen::VectorXd::Ones(batch);
  const double exact = meanflow_loss_fixed_target(
      net, z, r, t, s, Eigen::MatrixXd::Zero(net.cfg.action_dim(), batch));
  CHECK(exact == doctest::Approx(0.0));
}

TEST_CASE("stop-gradient: disabling target recomputation leaves grads unchanged") {
  Rng rng(7);
  MeanFlowNet net = random_net(rng);
  const int batch = 6;
  Rng data_rng(8);
  const Eigen::MatrixXd s = random_matrix(net.cfg.obs_dim, batch, data_rng);
  const Eigen::MatrixXd a = random_matrix(net.cfg.action_dim(), batch, data_rng);

  // Reproduce the internal sampling: z0, then (r, t) per column.
  Rng draw1(99);
  net::ConditionedMlpGrads g_live;
  g_live.match(net.body);
  const double loss_live = meanflow_loss(net, s, a, draw1, &g_live);

  // Rebuild the same batch by hand and feed the precomputed target.
  Rng draw2(99);
  Eigen::MatrixXd z0(net.cfg.action_dim(), batch);
  for (Eigen::Index c = 0; c < batch; ++c)
    for (Eigen::Index i = 0; i < z0.rows(); ++i) z0(i, c) = draw2.normal();
  Eigen::VectorXd r(batch), t(batch);
  for (Eigen::Index c = 0; c < batch; ++c) {
    auto [rr, tt] = sample_times(draw2);
    r(c) = rr;
    t(c) = tt;
  }
  const Eigen::MatrixXd s_norm = net.obs_norm.normalize_cols(s);
  const Eigen::MatrixXd a_norm = net.act_norm.normalize_cols(a);
  // Internal flow time: noise at t = 1 (see meanflow_loss).
  const Eigen::MatrixXd z_t =
      interpolant(z0, a_norm, (1.0 - t.array()).matrix());
  const Eigen::MatrixXd v = z0 - a_norm;
  const Eigen::MatrixXd target = meanflow_target(net, z_t, r, t, s_norm, v);

  net::ConditionedMlpGrads g_fixed;
  g_fixed.match(net.body);
  const double loss_fixed =
      meanflow_loss_fixed_target(net, z_t, r, t, s_norm, target, &g_fixed);

  CHECK(loss_live == doctest::Approx(loss_fixed));
  const auto live = g_live.flat();
  const auto fixed = g_fixed.flat();
  REQUIRE(live.size() == fixed.size());
  for (std::size_t i = 0; i < live.size(); ++i)
    for (Eigen::Index k = 0; k < live[i].size; ++k)
      CHECK(live[i].data[k] == doctest::Approx(fixed[i].data[k]).epsilon(1e-12));
}

TEST_CASE("r=t batches equal plain velocity regression") {
  Rng rng(9);
  MeanFlowNet net = random_net(rng);
  const int batch = 5;
  Rng data_rng(10);
  const Eigen::MatrixXd s = random_matrix(net.cfg.obs_dim, batch, data_rng);
  const Eigen::MatrixXd z_t = random_matrix(net.cfg.action_dim(), batch, data_rng);
  const Eigen::MatrixXd v = random_matrix(net.cfg.action_dim(), batch, data_rng);
  Eigen::VectorXd t(batch);
  t << 0.1, 0.3, 0.5, 0.7, 0.9;

  const Eigen::MatrixXd target = meanflow_target(net, z_t, t, t, s, v);
  const double loss = meanflow_loss_fixed_target(net, z_t, t, t, s, target);

  // Plain regression loss |u - v|^2 computed independently.
  const Eigen::MatrixXd u = net.body.forward(z_t, t, t, s);
  const double expected = (u - v).colwise().squaredNorm().mean();
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("normalization round trip") {
  Rng rng(11);
  Eigen::MatrixXd data = random_matrix(7, 200, rng);
  data.row(3).setConstant(4.2);  // zero-variance dimension gets floored
  const Normalizer n = Normalizer::fit(data);
  const Eigen::VectorXd x = data.col(17);
  CHECK((n.denormalize(n.normalize(x)) - x).norm() < 1e-12);
  const Eigen::MatrixXd z = n.normalize_cols(data);
  CHECK((n.denormalize_cols(z) - data).norm() < 1e-10);
}

TEST_CASE("generate: zero net returns denormalized noise, one forward pass") {
  Rng rng(12);
  MeanFlowNet net = MeanFlowNet::make(tiny_config(), rng);
  for (auto& l : net.body.trunk) {
    l.w.setZero();
    l.b.setZero();
  }
  net.act_norm.mean.setConstant(1.0);
  net.act_norm.std.setConstant(2.0);
  const Eigen::VectorXd obs = Eigen::VectorXd::Zero(net.cfg.obs_dim);
  Eigen::VectorXd z1(net.cfg.action_dim());
  for (Eigen::Index i = 0; i < z1.size(); ++i) z1(i) = 0.5 + 0.01 * i;

  const auto before = net.body.forward_count();
  const sim::ActionChunk chunk = generate(net, obs, z1);
  CHECK(net.body.forward_count() == before + 1);

  const Eigen::VectorXd expected =
      (z1.array() * 2.0 + 1.0).cwiseMax(0.0).cwiseMin(net.cfg.spread_clip);
  CHECK((chunk.flatten() - expected.matrix()).norm() < 1e-12);

  // Determinism in (s, z1).
  const sim::ActionChunk again = generate(net, obs, z1);
  CHECK(chunk.spreads == again.spreads);
}

TEST_CASE("generate clamps to valid spreads even for an untrained net") {
  Rng rng(13);
  MeanFlowNet net = random_net(rng, 1.0);
  net.act_norm.std.setConstant(10.0);
  Rng noise(14);
  for (int i = 0; i < 20; ++i) {
    const sim::ActionChunk c =
        generate(net, Eigen::VectorXd::Zero(net.cfg.obs_dim), noise);
    CHECK(c.spreads.allFinite());
    CHECK(c.spreads.minCoeff() >= 0.0);
    CHECK(c.spreads.maxCoeff() <= net.cfg.spread_clip);
  }
}

TEST_CASE("collect_demonstrations: single expert wins by construction") {
  sim::ChunkConfig chunk;
  CollectConfig cfg;
  cfg.experts = {"glft"};
  cfg.pairs_per_scenario = 60;
  cfg.selection_episodes = 4;
  cfg.seed = 21;
  const auto data = collect_demonstrations({quiet_scenario("one", 0.1)},
                                           closed_form_factory(chunk), chunk, cfg);
  CHECK(data.records.size() == 60);
  CHECK(data.scenarios.size() == 1);
  CHECK(data.scenarios[0].winner == "glft");
  for (const auto& rec : data.records) {
    CHECK(rec.expert_id == 0);
    CHECK(rec.state.size() == data.obs_dim);
    CHECK(rec.action.size() == 2 * chunk.t_pred);
  }
}

TEST_CASE("collect_demonstrations: exact tie breaks to the lower index") {
  sim::ChunkConfig chunk;
  CollectConfig cfg;
  cfg.experts = {"glft_drift", "glft"};  // identical policies at zero drift
  cfg.pairs_per_scenario = 30;
  cfg.selection_episodes = 3;
  cfg.seed = 22;
  const auto data = collect_demonstrations({quiet_scenario("tie", 0.1)},
                                           closed_form_factory(chunk), chunk, cfg);
  CHECK(data.scenarios[0].winner == "glft_drift");
}

TEST_CASE("collect_demonstrations rejects empty inputs") {
  sim::ChunkConfig chunk;
  CollectConfig cfg;
  CHECK_THROWS_AS(
      collect_demonstrations({}, closed_form_factory(chunk), chunk, cfg),
      std::invalid_argument);
  cfg.experts = {};
  CHECK_THROWS_AS(collect_demonstrations({quiet_scenario("x", 0.1)},
                                         closed_form_factory(chunk), chunk, cfg),
                  std::invalid_argument);
}

TEST_CASE("dataset: deterministic hash, save/load round trip, tamper check") {
  sim::ChunkConfig chunk;
  CollectConfig cfg;
  cfg.experts = {"as", "glft"};
  cfg.pairs_per_scenario = 40;
  cfg.selection_episodes = 3;
  cfg.seed = 33;
  const std::vector<ScenarioSpec> scenarios = {quiet_scenario("a", 0.05),
                                               quiet_scenario("b", 0.2)};
  const auto d1 =
      collect_demonstrations(scenarios, closed_form_factory(chunk), chunk, cfg);
  const auto d2 =
      collect_demonstrations(scenarios, closed_form_factory(chunk), chunk, cfg);
  CHECK(d1.content_hash() == d2.content_hash());

  const std::string path = "test_dataset.ffds";
  d1.save(path);
  const auto loaded = DemoDataset::load(path);
  CHECK(loaded.content_hash() == d1.content_hash());
  CHECK(loaded.records.size() == d1.records.size());
  CHECK(loaded.scenarios[1].name == "b");
  CHECK(loaded.obs_norm.mean.isApprox(d1.obs_norm.mean));

  // Flip one byte in the middle: load must reject.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    char c;
    f.seekg(100);
    f.get(c);
    f.seekp(100);
    f.put(static_cast<char>(c ^ 0x1));
  }
  CHECK_THROWS_WITH_AS(DemoDataset::load(path),
                       doctest::Contains("hash mismatch"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: round trip, config hash rejection") {
  Rng rng(15);
  MeanFlowNet net = random_net(rng);
  net.obs_norm.mean.setConstant(0.5);
  const std::string path = "test_meanflow.ckpt";
  save_meanflow(net, path);
  const MeanFlowNet loaded = load_meanflow(path);
  CHECK(loaded.param_hash() == net.param_hash());
  CHECK(loaded.config_hash() == net.config_hash());
  CHECK(loaded.cfg.hidden == net.cfg.hidden);

  // Corrupt the stored file: footer mismatch.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(60);
    char c;
    f.seekg(60);
    f.get(c);
    f.seekp(60);
    f.put(static_cast<char>(c ^ 0x4));
  }
  CHECK_THROWS_AS(load_meanflow(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("training: tiny overfit run reduces the loss") {
  // Scaled-down smoke version of the imitation criterion; the full 512-pair
  // 2k-step run lives in the acceptance suite.
  sim::ChunkConfig chunk;
  CollectConfig ccfg;
  ccfg.experts = {"glft"};
  ccfg.pairs_per_scenario = 64;
  ccfg.selection_episodes = 2;
  ccfg.seed = 44;
  const auto data = collect_demonstrations({quiet_scenario("ov", 0.1)},
                                           closed_form_factory(chunk), chunk, ccfg);

  MeanFlowConfig ncfg = tiny_config();
  TrainConfig tcfg;
  tcfg.steps = 300;
  tcfg.batch = 64;
  tcfg.seed = 45;
  tcfg.log_every = 50;
  MeanFlowNet net = pretrain_from_dataset(data, ncfg, tcfg);

  // Re-evaluate the loss on fresh draws before/after is awkward; instead use
  // the recorded curve: late loss well below the initial one.
  Rng eval_rng(46);
  Eigen::MatrixXd states(data.obs_dim, data.records.size());
  Eigen::MatrixXd actions(2 * chunk.t_pred, data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    states.col(i) = data.records[i].state;
    actions.col(i) = data.records[i].action;
  }
  const double final_loss = meanflow_loss(net, states, actions, eval_rng);

  Rng init_rng(derive_seed(45, {fnv1a("meanflow-init")}));
  MeanFlowNet fresh = MeanFlowNet::make(net.cfg, init_rng);
  fresh.obs_norm = data.obs_norm;
  fresh.act_norm = data.act_norm;
  Rng eval_rng2(46);
  const double init_loss = meanflow_loss(fresh, states, actions, eval_rng2);
  CHECK(final_loss < 0.5 * init_loss);
}
