#pragma once

// Small dense network with tanh hidden layers, an identity output layer, and
// hand-written backpropagation. Samples are columns.

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "ostk/random.hpp"

namespace ostk {

struct MlpGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  void set_zero();
  double squared_norm() const;
  std::vector<double> flatten() const;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  Eigen::MatrixXd& weight(std::size_t layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weight(std::size_t layer) const { return weights_[layer]; }
  Eigen::VectorXd& bias(std::size_t layer) { return biases_[layer]; }
  const Eigen::VectorXd& bias(std::size_t layer) const { return biases_[layer]; }

  /// Uniform ±sqrt(6 / (fan_in + fan_out)) weights and zero biases. The last
  /// layer's weights are zeroed when `zero_output` is set.
  void init_glorot(CounterRng& rng, bool zero_output);

  struct Tape {
    std::vector<Eigen::MatrixXd> activations;  // input, then each layer's output
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Adds d(loss)/d(params) to `grads`, given d(loss)/d(output) for the batch
  /// recorded in `tape`.
  void backward(const Tape& tape, const Eigen::MatrixXd& grad_out, MlpGradient& grads) const;

  MlpGradient zero_gradient() const;

  std::size_t parameter_count() const;
  /// Flat parameter access: layer by layer, weights row-major then biases.
  double parameter(std::size_t index) const;
  void set_parameter(std::size_t index, double value);

  bool operator==(const Mlp&) const = default;

 private:
  double* parameter_ptr(std::size_t index);

  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const Mlp& net, AdamConfig cfg);
  void step(Mlp& net, const MlpGradient& grads);

 private:
  AdamConfig cfg_;
  MlpGradient m_, v_;
  long t_ = 0;
};

}  // namespace ostk

namespace ostk {

/// Per-channel affine normalization fitted once before training.
struct ChannelNorm {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // > 0

  bool operator==(const ChannelNorm&) const = default;
};

/// Central finite differences of `loss` with respect to every parameter of
/// `net`. Parameters are restored afterwards.
std::vector<double> numeric_gradient(Mlp& net, const std::function<double()>& loss, double h);

/// max |a - n| / max(1, |a|, |n|)
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

}  // namespace ostk
