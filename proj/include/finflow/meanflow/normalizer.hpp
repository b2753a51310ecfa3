#pragma once

#include <Eigen/Core>

namespace finflow::meanflow {

// Per-dimension z-score transform with frozen statistics.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static Normalizer identity(int dim) {
    Normalizer n;
    n.mean = Eigen::VectorXd::Zero(dim);
    n.std = Eigen::VectorXd::Ones(dim);
    return n;
  }

  // Column-wise statistics of data (dim x count), std floored at 1e-8.
  static Normalizer fit(const Eigen::MatrixXd& data);

  int dim() const { return static_cast<int>(mean.size()); }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    return (x - mean).cwiseQuotient(std);
  }
  Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const {
    return z.cwiseProduct(std) + mean;
  }
  Eigen::MatrixXd normalize_cols(const Eigen::MatrixXd& x) const {
    return (x.colwise() - mean).array().colwise() / std.array();
  }
  Eigen::MatrixXd denormalize_cols(const Eigen::MatrixXd& z) const {
    return (z.array().colwise() * std.array()).colwise() + mean.array();
  }
};

}  // namespace finflow::meanflow
