#include "dqrec/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dqrec::nn {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
}  // namespace

double gelu(double x) { return x * normal_cdf(x); }

double gelu_grad(double x) { return normal_cdf(x) + x * normal_pdf(x); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd gelu(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

Eigen::VectorXd gelu_grad(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return gelu_grad(v); });
}

DenseLayer DenseLayer::init(int in_dim, int out_dim, Rng& rng) {
  if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("DenseLayer: bad dims");
  const double bound = std::sqrt(6.0 / (in_dim + out_dim));
  DenseLayer layer;
  layer.weight.resize(out_dim, in_dim);
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
  layer.bias = Eigen::VectorXd::Zero(out_dim);
  return layer;
}

Eigen::VectorXd DenseLayer::forward(const Eigen::VectorXd& input) const {
  if (input.size() != weight.cols()) {
    throw std::invalid_argument("DenseLayer::forward: input dim " + std::to_string(input.size()) +
                                " != " + std::to_string(weight.cols()));
  }
  return gelu(Eigen::VectorXd(weight * input + bias));
}

Eigen::VectorXd DenseLayer::forward(const Eigen::VectorXd& input, Cache& cache) const {
  if (input.size() != weight.cols()) {
    throw std::invalid_argument("DenseLayer::forward: input dim mismatch");
  }
  cache.input = input;
  cache.pre = weight * input + bias;
  return gelu(cache.pre);
}

DenseLayer::Grads DenseLayer::backward(const Cache& cache, const Eigen::VectorXd& upstream) const {
  if (upstream.size() != weight.rows()) {
    throw std::invalid_argument("DenseLayer::backward: upstream dim mismatch");
  }
  const Eigen::VectorXd dpre = upstream.cwiseProduct(gelu_grad(cache.pre));
  Grads g;
  g.weight = dpre * cache.input.transpose();
  g.bias = dpre;
  g.input = weight.transpose() * dpre;
  return g;
}

Mlp Mlp::init(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least in and out dims");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    mlp.layers.push_back(DenseLayer::init(dims[i], dims[i + 1], rng));
  }
  return mlp;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  Eigen::VectorXd x = input;
  for (const auto& layer : layers) x = layer.forward(x);
  return x;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input, Cache& cache) const {
  cache.layer.resize(layers.size());
  Eigen::VectorXd x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(x, cache.layer[i]);
  }
  return x;
}

Mlp::Grads Mlp::backward(const Cache& cache, const Eigen::VectorXd& upstream) const {
  Grads g;
  g.layer.resize(layers.size());
  Eigen::VectorXd grad = upstream;
  for (std::size_t i = layers.size(); i-- > 0;) {
    g.layer[i] = layers[i].backward(cache.layer[i], grad);
    grad = g.layer[i].input;
  }
  g.input = grad;
  return g;
}

EmbeddingTable EmbeddingTable::init(int vocab, int dim, Rng& rng) {
  if (vocab <= 0 || dim <= 0) throw std::invalid_argument("EmbeddingTable: bad dims");
  EmbeddingTable table;
  table.rows.resize(vocab, dim);
  for (int r = 0; r < vocab; ++r)
    for (int c = 0; c < dim; ++c) table.rows(r, c) = rng.normal(0.0, 0.01);
  return table;
}

Eigen::VectorXd EmbeddingTable::lookup(int index) const {
  if (index < 0 || index >= vocab()) {
    throw std::out_of_range("EmbeddingTable: index " + std::to_string(index) + " out of range");
  }
  return rows.row(index).transpose();
}

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state,
               const AdamConfig& config) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw std::invalid_argument("adam_step: param/grad shape mismatch");
  }
  if (!grad.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");
  if (state.step == 0) {
    state.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    state.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
  }
  state.step += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const Eigen::MatrixXd mhat = state.m / bc1;
  const Eigen::MatrixXd vhat = state.v / bc2;
  param.array() -= config.alpha * mhat.array() / (vhat.array().sqrt() + config.eps);
}

void adam_step(Eigen::VectorXd& param, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& config) {
  Eigen::MatrixXd p = param;
  adam_step(p, Eigen::MatrixXd(grad), state, config);
  param = p.col(0);
}

GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& point, const Eigen::VectorXd& analytic_grad,
                           double step) {
  if (point.size() != analytic_grad.size()) {
    throw std::invalid_argument("grad_check: gradient size mismatch");
  }
  GradCheckReport report;
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double orig = x(i);
    x(i) = orig + step;
    const double f_plus = f(x);
    x(i) = orig - step;
    const double f_minus = f(x);
    x(i) = orig;
    const double numeric = (f_plus - f_minus) / (2.0 * step);
    const double denom = std::max(1.0, std::abs(numeric));
    const double rel = std::abs(analytic_grad(i) - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace dqrec::nn
