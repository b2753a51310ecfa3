#include "finflow/net/mlp.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace finflow::net {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::Silu: return "silu";
    case Activation::Relu: return "relu";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "linear") return Activation::Linear;
  if (name == "tanh") return Activation::Tanh;
  if (name == "silu") return Activation::Silu;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + name);
}

bool is_smooth(Activation a) { return a != Activation::Relu; }

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& pre) {
  switch (a) {
    case Activation::Linear:
      return pre;
    case Activation::Tanh:
      return pre.array().tanh();
    case Activation::Silu: {
      const auto sig = (1.0 / (1.0 + (-pre.array()).exp()));
      return pre.array() * sig;
    }
    case Activation::Relu:
      return pre.cwiseMax(0.0);
  }
  return pre;
}

Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& pre) {
  switch (a) {
    case Activation::Linear:
      return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    case Activation::Tanh: {
      const auto th = pre.array().tanh();
      return 1.0 - th.square();
    }
    case Activation::Silu: {
      const auto sig = 1.0 / (1.0 + (-pre.array()).exp());
      return sig * (1.0 + pre.array() * (1.0 - sig));
    }
    case Activation::Relu:
      return (pre.array() > 0.0).cast<double>();
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

void MlpGrads::match(const Mlp& net) {
  dw.resize(net.layers.size());
  db.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    dw[i].setZero(net.layers[i].w.rows(), net.layers[i].w.cols());
    db[i].setZero(net.layers[i].b.size());
  }
}

void MlpGrads::zero() {
  for (auto& m : dw) m.setZero();
  for (auto& v : db) v.setZero();
}

std::vector<GradView> MlpGrads::flat() const {
  std::vector<GradView> out;
  for (std::size_t i = 0; i < dw.size(); ++i) {
    out.push_back({dw[i].data(), dw[i].size()});
    out.push_back({db[i].data(), db[i].size()});
  }
  return out;
}

Mlp Mlp::make(int input_dim, const std::vector<int>& hidden, int output_dim,
              Activation hidden_act, Rng& rng) {
  Mlp net;
  int in = input_dim;
  for (int h : hidden) {
    DenseLayer layer;
    layer.w.resize(h, in);
    orthogonal_init(layer.w, std::sqrt(2.0), rng);
    layer.b.setZero(h);
    layer.act = hidden_act;
    net.layers.push_back(std::move(layer));
    in = h;
  }
  DenseLayer out;
  out.w.resize(output_dim, in);
  orthogonal_init(out.w, 1.0, rng);
  out.b.setZero(output_dim);
  out.act = Activation::Linear;
  net.layers.push_back(std::move(out));
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (const auto& l : layers)
    h = apply_activation(l.act, (l.w * h).colwise() + l.b);
  return h;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return Eigen::VectorXd(forward(Eigen::MatrixXd(x)));
}

Eigen::MatrixXd Mlp::forward_cached(const Eigen::MatrixXd& x, Cache& cache) const {
  cache.inputs.clear();
  cache.pre.clear();
  Eigen::MatrixXd h = x;
  for (const auto& l : layers) {
    cache.inputs.push_back(h);
    Eigen::MatrixXd pre = (l.w * h).colwise() + l.b;
    cache.pre.push_back(pre);
    h = apply_activation(l.act, pre);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& upstream, const Cache& cache,
                              MlpGrads& grads) const {
  if (grads.dw.size() != layers.size()) grads.match(*this);
  Eigen::MatrixXd up = upstream;
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    const Eigen::MatrixXd up_pre =
        up.cwiseProduct(activation_derivative(layers[i].act, cache.pre[i]));
    grads.dw[i].noalias() += up_pre * cache.inputs[i].transpose();
    grads.db[i] += up_pre.rowwise().sum();
    up.noalias() = layers[i].w.transpose() * up_pre;
  }
  return up;
}

void Mlp::jvp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx,
              Eigen::MatrixXd& y, Eigen::MatrixXd& dy, Cache* cache) const {
  for (const auto& l : layers)
    if (!is_smooth(l.act))
      throw std::invalid_argument(
          "jvp requires smooth activations; got relu layer");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd h = x, dh = dx;
  for (const auto& l : layers) {
    if (cache) cache->inputs.push_back(h);
    Eigen::MatrixXd pre = (l.w * h).colwise() + l.b;
    Eigen::MatrixXd dpre = l.w * dh;
    if (cache) cache->pre.push_back(pre);
    h = apply_activation(l.act, pre);
    dh = dpre.cwiseProduct(activation_derivative(l.act, pre));
  }
  y = std::move(h);
  dy = std::move(dh);
}

std::vector<ParamView> Mlp::flat_params() {
  std::vector<ParamView> out;
  for (auto& l : layers) {
    out.push_back({l.w.data(), l.w.size()});
    out.push_back({l.b.data(), l.b.size()});
  }
  return out;
}

std::vector<GradView> Mlp::flat_params() const {
  std::vector<GradView> out;
  for (const auto& l : layers) {
    out.push_back({l.w.data(), l.w.size()});
    out.push_back({l.b.data(), l.b.size()});
  }
  return out;
}

void orthogonal_init(Eigen::MatrixXd& w, double gain, Rng& rng) {
  const Eigen::Index rows = w.rows(), cols = w.cols();
  const Eigen::Index n = std::max(rows, cols);
  Eigen::MatrixXd a(n, std::min(rows, cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, a.cols());
  Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  if (rows >= cols)
    w = gain * q.topRows(rows).leftCols(cols);
  else
    w = gain * q.topRows(cols).leftCols(rows).transpose();
  w = w.topLeftCorner(rows, cols).eval();
}

void fanin_uniform_init(Eigen::MatrixXd& w, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
}

}  // namespace finflow::net
