#pragma once

#include "dqrec/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace dqrec::nn {

// Exact GELU, x * Phi(x) with the erf-based standard-normal CDF.
double gelu(double x);
double gelu_grad(double x);
double sigmoid(double x);

Eigen::VectorXd gelu(const Eigen::VectorXd& x);
Eigen::VectorXd gelu_grad(const Eigen::VectorXd& x);

// Fully-connected layer with GELU activation: gelu(W x + b).
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  // Weights uniform in +-sqrt(6/(in+out)), bias zero.
  static DenseLayer init(int in_dim, int out_dim, Rng& rng);

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  struct Cache {
    Eigen::VectorXd input;
    Eigen::VectorXd pre;  // W x + b
  };
  struct Grads {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
    Eigen::VectorXd input;
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input, Cache& cache) const;
  Grads backward(const Cache& cache, const Eigen::VectorXd& upstream) const;
};

// Stack of DenseLayers; used for both towers.
struct Mlp {
  std::vector<DenseLayer> layers;

  // dims = {in, hidden..., out}
  static Mlp init(const std::vector<int>& dims, Rng& rng);

  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }

  struct Cache {
    std::vector<DenseLayer::Cache> layer;
  };
  struct Grads {
    std::vector<DenseLayer::Grads> layer;  // per layer, weight/bias grads
    Eigen::VectorXd input;
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input, Cache& cache) const;
  Grads backward(const Cache& cache, const Eigen::VectorXd& upstream) const;
};

struct EmbeddingTable {
  Eigen::MatrixXd rows;  // vocab x dim

  // normal(0, 0.01)
  static EmbeddingTable init(int vocab, int dim, Rng& rng);

  int vocab() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
  Eigen::VectorXd lookup(int index) const;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-tensor state; sized lazily on the first step.
struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  std::int64_t step = 0;
};

// Standard bias-corrected Adam update, in place. Throws on non-finite
// gradients.
void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state,
               const AdamConfig& config);
void adam_step(Eigen::VectorXd& param, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& config);

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
};

// Central finite differences against an analytic gradient. The error per
// component is |analytic - numeric| / max(1, |numeric|), so the reported
// value acts as relative error for large gradients and absolute error for
// small ones.
GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& point, const Eigen::VectorXd& analytic_grad,
                           double step = 1e-3);

}  // namespace dqrec::nn
