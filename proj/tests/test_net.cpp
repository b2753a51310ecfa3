#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "finflow/net/adam.hpp"
#include "finflow/net/film.hpp"
#include "finflow/net/mlp.hpp"

using namespace finflow;
using namespace finflow::net;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Central-difference gradient of sum(net(x)) w.r.t. every parameter.
double sum_output(const Mlp& net, const Eigen::MatrixXd& x) {
  return net.forward(x).sum();
}

double max_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max({std::abs(got[i]), std::abs(want[i]), 1e-6});
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("mlp forward: zero net maps to zero") {
  Rng rng(1);
  Mlp net = Mlp::make(4, {8}, 3, Activation::Silu, rng);
  for (auto& l : net.layers) {
    l.w.setZero();
    l.b.setZero();
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  const Eigen::VectorXd y = net.forward(ones);
  CHECK(y.norm() == doctest::Approx(0.0));
}

TEST_CASE("mlp forward: identity linear layer") {
  Mlp net;
  DenseLayer l;
  l.w = Eigen::MatrixXd::Identity(5, 5);
  l.b = Eigen::VectorXd::Zero(5);
  l.act = Activation::Linear;
  net.layers.push_back(l);
  Rng rng(2);
  const Eigen::VectorXd x = random_matrix(5, 1, rng);
  CHECK((net.forward(x) - x).norm() == doctest::Approx(0.0));
}

TEST_CASE("mlp backward matches finite differences on a fixed 8-16-4 net") {
  Rng rng(3);
  Mlp net = Mlp::make(8, {16}, 4, Activation::Silu, rng);
  const Eigen::MatrixXd x = random_matrix(8, 5, rng);

  Mlp::Cache cache;
  const Eigen::MatrixXd y = net.forward_cached(x, cache);
  MlpGrads grads;
  grads.match(net);
  net.backward(Eigen::MatrixXd::Ones(y.rows(), y.cols()), cache, grads);

  std::vector<double> analytic, numeric;
  auto params = net.flat_params();
  auto gviews = grads.flat();
  const double eps = 1e-5;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t].size; ++i) {
      analytic.push_back(gviews[t].data[i]);
      const double saved = params[t].data[i];
      params[t].data[i] = saved + eps;
      const double up = sum_output(net, x);
      params[t].data[i] = saved - eps;
      const double down = sum_output(net, x);
      params[t].data[i] = saved;
      numeric.push_back((up - down) / (2.0 * eps));
    }
  }
  CHECK(max_rel_err(analytic, numeric) < 1e-4);
}

TEST_CASE("linear layer gradient is the outer product") {
  Mlp net;
  DenseLayer l;
  l.w = Eigen::MatrixXd::Zero(2, 3);
  l.b = Eigen::VectorXd::Zero(2);
  l.act = Activation::Linear;
  net.layers.push_back(l);
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 3.0;
  Eigen::MatrixXd upstream(2, 1);
  upstream << 0.5, -1.0;
  Mlp::Cache cache;
  net.forward_cached(x, cache);
  MlpGrads grads;
  grads.match(net);
  net.backward(upstream, cache, grads);
  CHECK(grads.dw[0] == upstream * x.transpose());
  CHECK(grads.db[0] == upstream.col(0));
}

TEST_CASE("constant-output head has zero gradient") {
  Rng rng(4);
  Mlp net = Mlp::make(3, {6}, 2, Activation::Tanh, rng);
  net.layers.back().w.setZero();  // output ignores features
  const Eigen::MatrixXd x = random_matrix(3, 4, rng);
  Mlp::Cache cache;
  net.forward_cached(x, cache);
  MlpGrads grads;
  grads.match(net);
  net.backward(Eigen::MatrixXd::Ones(2, 4), cache, grads);
  // Hidden-layer gradients vanish because upstream passes through zero W.
  CHECK(grads.dw[0].norm() == doctest::Approx(0.0));
  CHECK(grads.db[0].norm() == doctest::Approx(0.0));
  // Output bias still sees the upstream.
  CHECK(grads.db[1].norm() > 0.0);
}

TEST_CASE("film_forward") {
  Rng rng(5);
  FilmLayer film;
  film.conditioner = Mlp::make(3, {8}, 2 * 6, Activation::Silu, rng);

  SUBCASE("identity modulation with unit gamma head") {
    film.conditioner.layers.back().w.setZero();
    film.conditioner.layers.back().b.head(6).setOnes();
    film.conditioner.layers.back().b.tail(6).setZero();
    const Eigen::VectorXd h = random_matrix(6, 1, rng);
    const Eigen::VectorXd s = random_matrix(3, 1, rng);
    CHECK((film_forward(h, s, film) - h).norm() == doctest::Approx(0.0));
  }
  SUBCASE("zero features return beta") {
    const Eigen::VectorXd s = random_matrix(3, 1, rng);
    const Eigen::VectorXd gb = film.conditioner.forward(s);
    const Eigen::VectorXd out =
        film_forward(Eigen::VectorXd::Zero(6), s, film);
    CHECK((out - gb.tail(6)).norm() == doctest::Approx(0.0));
  }
  SUBCASE("different conditions modulate differently") {
    const Eigen::VectorXd h = random_matrix(6, 1, rng);
    const Eigen::VectorXd s1 = random_matrix(3, 1, rng);
    const Eigen::VectorXd s2 = random_matrix(3, 1, rng);
    CHECK((film_forward(h, s1, film) - film_forward(h, s2, film)).norm() > 1e-8);
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(
        film_forward(Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(3), film),
        std::invalid_argument);
  }
}

TEST_CASE("jvp: zero tangent gives zero derivative") {
  Rng rng(6);
  Mlp net = Mlp::make(4, {8, 8}, 3, Activation::Silu, rng);
  const Eigen::MatrixXd x = random_matrix(4, 2, rng);
  Eigen::MatrixXd y, dy;
  net.jvp(x, Eigen::MatrixXd::Zero(4, 2), y, dy);
  CHECK(dy.norm() == doctest::Approx(0.0));
  CHECK((y - net.forward(x)).norm() == doctest::Approx(0.0));
}

TEST_CASE("jvp: closed form for a linear map") {
  // u(z, t) = W z + c t: tangent (v, 1) gives W v + c exactly.
  Rng rng(7);
  const int zdim = 5;
  ConditionedMlp net;
  DenseLayer out;
  out.w = random_matrix(zdim, zdim + 2, rng);
  out.b = Eigen::VectorXd::Zero(zdim);
  out.act = Activation::Linear;
  net.trunk.push_back(out);

  const Eigen::MatrixXd z = random_matrix(zdim, 3, rng);
  const Eigen::MatrixXd v = random_matrix(zdim, 3, rng);
  const Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd t = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd s(0, 3);

  Eigen::MatrixXd y, dy;
  net.jvp(z, r, t, s, v, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3),
          Eigen::MatrixXd(0, 3), y, dy);

  const Eigen::MatrixXd wz = out.w.leftCols(zdim);
  const Eigen::VectorXd ct = out.w.col(zdim + 1);
  Eigen::MatrixXd expected = wz * v;
  expected.colwise() += ct;
  CHECK((dy - expected).norm() < 1e-12);
}

TEST_CASE("jvp matches central finite differences on the film body") {
  Rng rng(8);
  ConditionedMlp net =
      ConditionedMlp::make(6, 5, {16, 16}, 8, Activation::Silu, rng);
  // Make the film conditioners non-trivial.
  for (auto& f : net.films) {
    f.conditioner.layers.back().w = random_matrix(
        f.conditioner.layers.back().w.rows(),
        f.conditioner.layers.back().w.cols(), rng) * 0.3;
  }
  const Eigen::MatrixXd z = random_matrix(6, 1, rng);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 0.2);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 0.8);
  const Eigen::MatrixXd s = random_matrix(5, 1, rng);
  const Eigen::MatrixXd dz = random_matrix(6, 1, rng);
  const Eigen::MatrixXd ds = random_matrix(5, 1, rng);
  const double dr = 0.7, dt = 1.3;

  Eigen::MatrixXd y, dy;
  net.jvp(z, r, t, s, dz, Eigen::VectorXd::Constant(1, dr),
          Eigen::VectorXd::Constant(1, dt), ds, y, dy);

  const double eps = 1e-4;
  const Eigen::MatrixXd up =
      net.forward(z + eps * dz, (r.array() + eps * dr).matrix(),
                  (t.array() + eps * dt).matrix(), s + eps * ds);
  const Eigen::MatrixXd down =
      net.forward(z - eps * dz, (r.array() - eps * dr).matrix(),
                  (t.array() - eps * dt).matrix(), s - eps * ds);
  const Eigen::MatrixXd fd = (up - down) / (2.0 * eps);
  CHECK((dy - fd).norm() / std::max(1e-9, fd.norm()) < 1e-3);
}

TEST_CASE("jvp linearity in the tangent") {
  Rng rng(9);
  Mlp net = Mlp::make(5, {12}, 4, Activation::Silu, rng);
  const Eigen::MatrixXd x = random_matrix(5, 1, rng);
  const Eigen::MatrixXd d1 = random_matrix(5, 1, rng);
  const Eigen::MatrixXd d2 = random_matrix(5, 1, rng);
  const double a = 1.7, b = -0.4;
  Eigen::MatrixXd y, dy1, dy2, dy12;
  net.jvp(x, d1, y, dy1);
  net.jvp(x, d2, y, dy2);
  net.jvp(x, a * d1 + b * d2, y, dy12);
  CHECK((dy12 - (a * dy1 + b * dy2)).norm() < 1e-12);
}

TEST_CASE("reverse/forward consistency for scalar heads") {
  Rng rng(10);
  Mlp net = Mlp::make(6, {14, 14}, 1, Activation::Silu, rng);
  const Eigen::MatrixXd x = random_matrix(6, 1, rng);
  const Eigen::MatrixXd d = random_matrix(6, 1, rng);

  Mlp::Cache cache;
  net.forward_cached(x, cache);
  MlpGrads grads;
  grads.match(net);
  const Eigen::MatrixXd dx =
      net.backward(Eigen::MatrixXd::Ones(1, 1), cache, grads);

  Eigen::MatrixXd y, dy;
  net.jvp(x, d, y, dy);
  const double inner = (dx.transpose() * d)(0, 0);
  CHECK(std::abs(inner - dy(0, 0)) / std::max(1e-12, std::abs(dy(0, 0))) < 1e-6);
}

TEST_CASE("relu graphs are rejected by jvp and by the film body") {
  Rng rng(11);
  Mlp net = Mlp::make(3, {4}, 2, Activation::Relu, rng);
  Eigen::MatrixXd y, dy;
  CHECK_THROWS_AS(net.jvp(Eigen::MatrixXd::Zero(3, 1),
                          Eigen::MatrixXd::Zero(3, 1), y, dy),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConditionedMlp::make(4, 3, {8}, 4, Activation::Relu, rng),
                  std::invalid_argument);
}

TEST_CASE("film body backward matches finite differences") {
  Rng rng(12);
  ConditionedMlp net = ConditionedMlp::make(4, 3, {10}, 6, Activation::Silu, rng);
  for (auto& f : net.films)
    f.conditioner.layers.back().w = random_matrix(
        f.conditioner.layers.back().w.rows(),
        f.conditioner.layers.back().w.cols(), rng) * 0.2;

  const Eigen::MatrixXd z = random_matrix(4, 3, rng);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(3, 0.1);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 0.9);
  const Eigen::MatrixXd s = random_matrix(3, 3, rng);

  ConditionedMlp::Cache cache;
  Eigen::MatrixXd y, dy;
  net.jvp(z, r, t, s, Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(3),
          Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3), y, dy, &cache);
  ConditionedMlpGrads grads;
  grads.match(net);
  net.backward(Eigen::MatrixXd::Ones(4, 3), cache, grads);

  auto params = net.flat_params();
  auto gviews = grads.flat();
  std::vector<double> analytic, numeric;
  const double eps = 1e-5;
  // Sample a spread of parameters (every 7th) to keep the test quick.
  for (std::size_t tix = 0; tix < params.size(); ++tix) {
    for (Eigen::Index i = 0; i < params[tix].size; i += 7) {
      analytic.push_back(gviews[tix].data[i]);
      const double saved = params[tix].data[i];
      params[tix].data[i] = saved + eps;
      const double up = net.forward(z, r, t, s).sum();
      params[tix].data[i] = saved - eps;
      const double down = net.forward(z, r, t, s).sum();
      params[tix].data[i] = saved;
      numeric.push_back((up - down) / (2.0 * eps));
    }
  }
  CHECK(max_rel_err(analytic, numeric) < 1e-4);
}

TEST_CASE("adam optimizes a quadratic and clips the global norm") {
  // Minimize |x - target|^2 over a fake single-tensor "network".
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(4, 3.0);
  Adam opt({0.05, 0.9, 0.999, 1e-8, 0.0});
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd grad = 2.0 * (x - target);
    opt.step({{x.data(), x.size()}}, {{grad.data(), grad.size()}});
  }
  CHECK((x - target).norm() < 1e-3);

  // With clipping, a single step moves by at most lr-ish * clip direction.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  Adam clipped({1e-2, 0.9, 0.999, 1e-8, 1.0});
  Eigen::VectorXd huge = Eigen::VectorXd::Constant(2, 1e9);
  clipped.step({{y.data(), y.size()}}, {{huge.data(), huge.size()}});
  CHECK(y.norm() < 1.0);  // no blow-up
}

TEST_CASE("forward count instrumentation") {
  Rng rng(13);
  ConditionedMlp net = ConditionedMlp::make(4, 3, {8}, 4, Activation::Silu, rng);
  const auto before = net.forward_count();
  net.forward(Eigen::MatrixXd::Zero(4, 1), Eigen::VectorXd::Zero(1),
              Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(3, 1));
  CHECK(net.forward_count() == before + 1);
}
