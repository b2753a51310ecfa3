#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <vector>

#include "finflow/net/mlp.hpp"

namespace finflow::net {

// Feature-wise linear modulation: a conditioner maps the condition vector to
// (gamma, beta) of the modulated width and the hidden features become
// gamma .* h + beta.
struct FilmLayer {
  Mlp conditioner;  // cond_dim -> 2 * width, stacked [gamma; beta]

  int width() const { return conditioner.output_dim() / 2; }
};

Eigen::VectorXd film_forward(const Eigen::VectorXd& h, const Eigen::VectorXd& s,
                             const FilmLayer& layer);

struct ConditionedMlpGrads {
  std::vector<Eigen::MatrixXd> trunk_dw;
  std::vector<Eigen::VectorXd> trunk_db;
  std::vector<MlpGrads> film;

  void match(const struct ConditionedMlp& net);
  void zero();
  std::vector<GradView> flat() const;
};

// Average-velocity network body: trunk input is [z; r; t], every hidden layer
// is FiLM-modulated by the condition s, output head is linear with the same
// dimension as z.
struct ConditionedMlp {
  std::vector<DenseLayer> trunk;  // hidden layers + linear output layer
  std::vector<FilmLayer> films;   // one per hidden layer

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;     // trunk layer inputs
    std::vector<Eigen::MatrixXd> pre;        // trunk pre-activations
    std::vector<Eigen::MatrixXd> activated;  // hidden activations before FiLM
    std::vector<Eigen::MatrixXd> gamma, beta;
    std::vector<Mlp::Cache> film_caches;
  };

  // z_dim inputs plus the two interval scalars.
  static ConditionedMlp make(int z_dim, int cond_dim,
                             const std::vector<int>& hidden, int cond_hidden,
                             Activation act, Rng& rng);

  int z_dim() const;
  int cond_dim() const;
  std::size_t param_count() const;
  std::uint64_t forward_count() const { return forward_count_.load(); }

  // Batched evaluation; z is z_dim x batch, r and t are batch-sized vectors,
  // s is cond_dim x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& z, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& t,
                          const Eigen::MatrixXd& s) const;

  // Forward-mode directional derivative through trunk and FiLM. Fills the
  // cache (primal side) when provided so a reverse pass can follow.
  void jvp(const Eigen::MatrixXd& z, const Eigen::VectorXd& r,
           const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
           const Eigen::MatrixXd& dz, const Eigen::VectorXd& dr,
           const Eigen::VectorXd& dt, const Eigen::MatrixXd& ds,
           Eigen::MatrixXd& y, Eigen::MatrixXd& dy,
           Cache* cache = nullptr) const;

  // Reverse-mode through trunk and conditioners.
  void backward(const Eigen::MatrixXd& upstream, const Cache& cache,
                ConditionedMlpGrads& grads) const;

  std::vector<ParamView> flat_params();
  std::vector<GradView> flat_params() const;

  ConditionedMlp() = default;
  ConditionedMlp(const ConditionedMlp& other)
      : trunk(other.trunk), films(other.films) {}
  ConditionedMlp& operator=(const ConditionedMlp& other) {
    trunk = other.trunk;
    films = other.films;
    return *this;
  }

 private:
  Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& z,
                                 const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& t) const;
  mutable std::atomic<std::uint64_t> forward_count_{0};
};

}  // namespace finflow::net
