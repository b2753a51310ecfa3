#include "finflow/net/film.hpp"

#include <stdexcept>

namespace finflow::net {

Eigen::VectorXd film_forward(const Eigen::VectorXd& h, const Eigen::VectorXd& s,
                             const FilmLayer& layer) {
  if (h.size() != layer.width())
    throw std::invalid_argument("film: feature width mismatch");
  if (s.size() != layer.conditioner.input_dim())
    throw std::invalid_argument("film: condition dimension mismatch");
  const Eigen::VectorXd gb = layer.conditioner.forward(s);
  const Eigen::VectorXd gamma = gb.head(layer.width());
  const Eigen::VectorXd beta = gb.tail(layer.width());
  return gamma.cwiseProduct(h) + beta;
}

void ConditionedMlpGrads::match(const ConditionedMlp& net) {
  trunk_dw.resize(net.trunk.size());
  trunk_db.resize(net.trunk.size());
  for (std::size_t i = 0; i < net.trunk.size(); ++i) {
    trunk_dw[i].setZero(net.trunk[i].w.rows(), net.trunk[i].w.cols());
    trunk_db[i].setZero(net.trunk[i].b.size());
  }
  film.resize(net.films.size());
  for (std::size_t i = 0; i < net.films.size(); ++i)
    film[i].match(net.films[i].conditioner);
}

void ConditionedMlpGrads::zero() {
  for (auto& m : trunk_dw) m.setZero();
  for (auto& v : trunk_db) v.setZero();
  for (auto& f : film) f.zero();
}

std::vector<GradView> ConditionedMlpGrads::flat() const {
  std::vector<GradView> out;
  for (std::size_t i = 0; i < trunk_dw.size(); ++i) {
    out.push_back({trunk_dw[i].data(), trunk_dw[i].size()});
    out.push_back({trunk_db[i].data(), trunk_db[i].size()});
  }
  for (const auto& f : film) {
    auto fg = f.flat();
    out.insert(out.end(), fg.begin(), fg.end());
  }
  return out;
}

ConditionedMlp ConditionedMlp::make(int z_dim, int cond_dim,
                                    const std::vector<int>& hidden,
                                    int cond_hidden, Activation act, Rng& rng) {
  if (!is_smooth(act))
    throw std::invalid_argument(
        "conditioned mlp: activation must be smooth (the graph is "
        "differentiated in its inputs)");
  ConditionedMlp net;
  int in = z_dim + 2;
  for (int h : hidden) {
    DenseLayer layer;
    layer.w.resize(h, in);
    orthogonal_init(layer.w, std::sqrt(2.0), rng);
    layer.b.setZero(h);
    layer.act = act;
    net.trunk.push_back(std::move(layer));

    // Conditioner ends in a zero weight layer with bias (1, 0): training
    // starts at identity modulation.
    FilmLayer film;
    film.conditioner = Mlp::make(cond_dim, {cond_hidden}, 2 * h, act, rng);
    film.conditioner.layers.back().w.setZero();
    film.conditioner.layers.back().b.head(h).setOnes();
    film.conditioner.layers.back().b.tail(h).setZero();
    net.films.push_back(std::move(film));
    in = h;
  }
  DenseLayer out;
  out.w.resize(z_dim, in);
  orthogonal_init(out.w, 0.01, rng);
  out.b.setZero(z_dim);
  out.act = Activation::Linear;
  net.trunk.push_back(std::move(out));
  return net;
}

int ConditionedMlp::z_dim() const {
  return static_cast<int>(trunk.back().w.rows());
}

int ConditionedMlp::cond_dim() const {
  return films.empty() ? 0 : films.front().conditioner.input_dim();
}

std::size_t ConditionedMlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : trunk) n += l.w.size() + l.b.size();
  for (const auto& f : films) n += f.conditioner.param_count();
  return n;
}

Eigen::MatrixXd ConditionedMlp::assemble_input(const Eigen::MatrixXd& z,
                                               const Eigen::VectorXd& r,
                                               const Eigen::VectorXd& t) const {
  if (z.cols() != r.size() || z.cols() != t.size())
    throw std::invalid_argument("conditioned mlp: batch size mismatch");
  Eigen::MatrixXd x(z.rows() + 2, z.cols());
  x.topRows(z.rows()) = z;
  x.row(z.rows()) = r.transpose();
  x.row(z.rows() + 1) = t.transpose();
  return x;
}

Eigen::MatrixXd ConditionedMlp::forward(const Eigen::MatrixXd& z,
                                        const Eigen::VectorXd& r,
                                        const Eigen::VectorXd& t,
                                        const Eigen::MatrixXd& s) const {
  forward_count_.fetch_add(1, std::memory_order_relaxed);
  Eigen::MatrixXd h = assemble_input(z, r, t);
  for (std::size_t i = 0; i + 1 < trunk.size(); ++i) {
    const auto& l = trunk[i];
    Eigen::MatrixXd a = apply_activation(l.act, (l.w * h).colwise() + l.b);
    const Eigen::MatrixXd gb = films[i].conditioner.forward(s);
    const int w = films[i].width();
    h = gb.topRows(w).cwiseProduct(a) + gb.bottomRows(w);
  }
  const auto& out = trunk.back();
  return (out.w * h).colwise() + out.b;
}

void ConditionedMlp::jvp(const Eigen::MatrixXd& z, const Eigen::VectorXd& r,
                         const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& dz, const Eigen::VectorXd& dr,
                         const Eigen::VectorXd& dt, const Eigen::MatrixXd& ds,
                         Eigen::MatrixXd& y, Eigen::MatrixXd& dy,
                         Cache* cache) const {
  forward_count_.fetch_add(1, std::memory_order_relaxed);
  for (const auto& l : trunk)
    if (!is_smooth(l.act))
      throw std::invalid_argument("jvp requires smooth activations");

  const bool ds_zero = ds.size() == 0 || ds.isZero(0.0);
  if (cache) *cache = Cache{};

  Eigen::MatrixXd h = assemble_input(z, r, t);
  Eigen::MatrixXd dh = assemble_input(dz, dr, dt);
  for (std::size_t i = 0; i + 1 < trunk.size(); ++i) {
    const auto& l = trunk[i];
    if (cache) cache->inputs.push_back(h);
    Eigen::MatrixXd pre = (l.w * h).colwise() + l.b;
    Eigen::MatrixXd dpre = l.w * dh;
    Eigen::MatrixXd a = apply_activation(l.act, pre);
    Eigen::MatrixXd da = dpre.cwiseProduct(activation_derivative(l.act, pre));

    const int w = films[i].width();
    Eigen::MatrixXd gb, dgb;
    Mlp::Cache* fc = nullptr;
    if (cache) {
      cache->film_caches.emplace_back();
      fc = &cache->film_caches.back();
    }
    if (ds_zero) {
      gb = fc ? films[i].conditioner.forward_cached(s, *fc)
              : films[i].conditioner.forward(s);
      dgb.setZero(gb.rows(), gb.cols());
    } else {
      films[i].conditioner.jvp(s, ds, gb, dgb, fc);
    }
    const auto gamma = gb.topRows(w);
    const auto beta = gb.bottomRows(w);
    const auto dgamma = dgb.topRows(w);
    const auto dbeta = dgb.bottomRows(w);

    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->activated.push_back(a);
      cache->gamma.push_back(gamma);
      cache->beta.push_back(beta);
    }
    dh = gamma.cwiseProduct(da) + dgamma.cwiseProduct(a) + dbeta;
    h = gamma.cwiseProduct(a) + beta;
  }
  const auto& out = trunk.back();
  if (cache) {
    cache->inputs.push_back(h);
    cache->pre.push_back((out.w * h).colwise() + out.b);
  }
  y = (out.w * h).colwise() + out.b;
  dy = out.w * dh;
}

void ConditionedMlp::backward(const Eigen::MatrixXd& upstream, const Cache& cache,
                              ConditionedMlpGrads& grads) const {
  if (grads.trunk_dw.size() != trunk.size()) grads.match(*this);
  const std::size_t n_hidden = trunk.size() - 1;

  // Output layer (linear).
  grads.trunk_dw[n_hidden].noalias() +=
      upstream * cache.inputs[n_hidden].transpose();
  grads.trunk_db[n_hidden] += upstream.rowwise().sum();
  Eigen::MatrixXd up_h = trunk[n_hidden].w.transpose() * upstream;

  for (int i = static_cast<int>(n_hidden) - 1; i >= 0; --i) {
    // FiLM: h = gamma .* a + beta.
    const Eigen::MatrixXd up_gamma = up_h.cwiseProduct(cache.activated[i]);
    const Eigen::MatrixXd& up_beta = up_h;
    Eigen::MatrixXd up_gb(up_gamma.rows() * 2, up_gamma.cols());
    up_gb.topRows(up_gamma.rows()) = up_gamma;
    up_gb.bottomRows(up_gamma.rows()) = up_beta;
    films[i].conditioner.backward(up_gb, cache.film_caches[i], grads.film[i]);

    const Eigen::MatrixXd up_a = up_h.cwiseProduct(cache.gamma[i]);
    const Eigen::MatrixXd up_pre =
        up_a.cwiseProduct(activation_derivative(trunk[i].act, cache.pre[i]));
    grads.trunk_dw[i].noalias() += up_pre * cache.inputs[i].transpose();
    grads.trunk_db[i] += up_pre.rowwise().sum();
    up_h.noalias() = trunk[i].w.transpose() * up_pre;
  }
}

std::vector<ParamView> ConditionedMlp::flat_params() {
  std::vector<ParamView> out;
  for (auto& l : trunk) {
    out.push_back({l.w.data(), l.w.size()});
    out.push_back({l.b.data(), l.b.size()});
  }
  for (auto& f : films) {
    auto fp = f.conditioner.flat_params();
    out.insert(out.end(), fp.begin(), fp.end());
  }
  return out;
}

std::vector<GradView> ConditionedMlp::flat_params() const {
  std::vector<GradView> out;
  for (const auto& l : trunk) {
    out.push_back({l.w.data(), l.w.size()});
    out.push_back({l.b.data(), l.b.size()});
  }
  for (const auto& f : films) {
    auto fp = f.conditioner.flat_params();
    out.insert(out.end(), fp.begin(), fp.end());
  }
  return out;
}

}  // namespace finflow::net
