#include "finflow/net/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace finflow::net {

void Adam::step(const std::vector<ParamView>& params,
                const std::vector<GradView>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: params/grads size mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].setZero(params[i].size);
      v_[i].setZero(params[i].size);
    }
  }

  double scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads)
      sq += Eigen::Map<const Eigen::VectorXd>(g.data, g.size).squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size)
      throw std::invalid_argument("adam: tensor shape mismatch");
    Eigen::Map<Eigen::VectorXd> p(params[i].data, params[i].size);
    Eigen::Map<const Eigen::VectorXd> g_raw(grads[i].data, grads[i].size);
    const Eigen::ArrayXd g = scale * g_raw.array();
    m_[i] = cfg_.beta1 * m_[i].array() + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * g.square();
    const Eigen::ArrayXd m_hat = m_[i].array() / bc1;
    const Eigen::ArrayXd v_hat = v_[i].array() / bc2;
    p.array() -= cfg_.lr * m_hat / (v_hat.sqrt() + cfg_.eps);
  }
}

}  // namespace finflow::net
