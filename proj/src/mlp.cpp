#include "ostk/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "ostk/error.hpp"

namespace ostk {

void MlpGradient::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double MlpGradient::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

std::vector<double> MlpGradient::flatten() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) out.push_back(weights[l](r, c));
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
  }
  return out;
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorKind::validation, "network needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw Error(ErrorKind::validation, "layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

void Mlp::init_glorot(CounterRng& rng, bool zero_output) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
    biases_[l].setZero();
  }
  if (zero_output && !weights_.empty()) weights_.back().setZero();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = (l + 1 < weights_.size()) ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_size()) throw Error(ErrorKind::shape, "network input has wrong size");
  tape.activations.clear();
  tape.activations.push_back(x);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * tape.activations.back();
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh();
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back();
}

void Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_out, MlpGradient& grads) const {
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) {
      // tanh'(z) = 1 - a²
      delta.array() *= 1.0 - tape.activations[l + 1].array().square();
    }
    grads.weights[l].noalias() += delta * tape.activations[l].transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l > 0) delta = weights_[l].transpose() * delta;
  }
}

MlpGradient Mlp::zero_gradient() const {
  MlpGradient g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

double* Mlp::parameter_ptr(std::size_t index) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto w = static_cast<std::size_t>(weights_[l].size());
    if (index < w) {
      const auto cols = static_cast<std::size_t>(weights_[l].cols());
      return &weights_[l](static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols));
    }
    index -= w;
    const auto b = static_cast<std::size_t>(biases_[l].size());
    if (index < b) return &biases_[l](static_cast<Eigen::Index>(index));
    index -= b;
  }
  throw Error(ErrorKind::range, "parameter index out of range");
}

double Mlp::parameter(std::size_t index) const { return *const_cast<Mlp*>(this)->parameter_ptr(index); }

void Mlp::set_parameter(std::size_t index, double value) { *parameter_ptr(index) = value; }

Adam::Adam(const Mlp& net, AdamConfig cfg) : cfg_(cfg), m_(net.zero_gradient()), v_(net.zero_gradient()) {}

void Adam::step(Mlp& net, const MlpGradient& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    param.array() -= cfg_.step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weight(l), grads.weights[l], m_.weights[l], v_.weights[l]);
    update(net.bias(l), grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

}  // namespace ostk

namespace ostk {

std::vector<double> numeric_gradient(Mlp& net, const std::function<double()>& loss, double h) {
  std::vector<double> out(net.parameter_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double saved = net.parameter(i);
    net.set_parameter(i, saved + h);
    const double up = loss();
    net.set_parameter(i, saved - h);
    const double down = loss();
    net.set_parameter(i, saved);
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  if (analytic.size() != numeric.size()) throw Error(ErrorKind::shape, "gradient size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    worst = std::max(worst, std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}));
  }
  return worst;
}

}  // namespace ostk
