#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "finflow/rng.hpp"

namespace finflow::net {

// Activations are restricted to the smooth family wherever a graph must be
// differentiated in its inputs (the average-velocity target needs d/dt to
// exist everywhere); Relu is available for plain nets but rejected by jvp.
enum class Activation { Linear, Tanh, Silu, Relu };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);
bool is_smooth(Activation a);

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& pre);
Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& pre);

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::Linear;
};

// Flat views over parameter/gradient tensors, so optimizers can treat a whole
// network as one list regardless of layer structure.
struct ParamView {
  double* data = nullptr;
  Eigen::Index size = 0;
};
struct GradView {
  const double* data = nullptr;
  Eigen::Index size = 0;
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;

  void match(const struct Mlp& net);
  void zero();
  std::vector<GradView> flat() const;
};

// Plain multilayer perceptron on column-batched data (dim x batch).
struct Mlp {
  std::vector<DenseLayer> layers;

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  static Mlp make(int input_dim, const std::vector<int>& hidden, int output_dim,
                  Activation hidden_act, Rng& rng);

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }
  std::size_t param_count() const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward_cached(const Eigen::MatrixXd& x, Cache& cache) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Reverse-mode: accumulates parameter gradients into grads and returns
  // dL/dX for the given upstream dL/dY.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream, const Cache& cache,
                           MlpGrads& grads) const;

  // Forward-mode directional derivative. Requires smooth activations.
  // Populates cache when given so a reverse pass can reuse the primal.
  void jvp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx,
           Eigen::MatrixXd& y, Eigen::MatrixXd& dy,
           Cache* cache = nullptr) const;

  std::vector<ParamView> flat_params();
  std::vector<GradView> flat_params() const;
};

// Orthogonal rows/columns scaled by gain; falls back to the transpose trick
// for wide matrices.
void orthogonal_init(Eigen::MatrixXd& w, double gain, Rng& rng);
void fanin_uniform_init(Eigen::MatrixXd& w, Rng& rng);

}  // namespace finflow::net
