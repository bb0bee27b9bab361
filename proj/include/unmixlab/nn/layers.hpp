#pragma once

#include "unmixlab/nn/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace unmixlab::nn {

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Uniform(-sqrt(6/fan_in), sqrt(6/fan_in)); layers start with zero biases.
void init_he_uniform(Parameter& p, int fan_in, std::mt19937_64& rng);

struct ConvGeometry {
  int kernel = 4;
  int stride = 2;
  int pad = 1;
};

// 2-D convolution, weight (out, in*k*k), bias (out, 1).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry);

  int output_size(int input) const { return (input + 2 * geom_.pad - geom_.kernel) / geom_.stride + 1; }
  Tensor forward(const Tensor& x) const;
  // Accumulates weight/bias gradients when `accumulate` is set; returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
  ConvGeometry geom_;
  Parameter weight_, bias_;
};

// Transposed convolution (the adjoint of Conv2d), weight (in, out*k*k).
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry);

  int output_size(int input) const { return (input - 1) * geom_.stride - 2 * geom_.pad + geom_.kernel; }
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  int in_ = 0, out_ = 0;
  ConvGeometry geom_;
  Parameter weight_, bias_;
};

// Fully connected layer on row-major batches: Y = X W^T + b^T.
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  int in_features() const { return in_; }

 private:
  int in_ = 0, out_ = 0;
  Parameter weight_, bias_;
};

// Elementwise activations. Backward passes take the forward *output*.
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& y, const Tensor& dy);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor leaky_relu_backward(const Tensor& y, const Tensor& dy, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);
// Softmax across channels at every pixel.
Tensor channel_softmax(const Tensor& x);
Tensor channel_softmax_backward(const Tensor& y, const Tensor& dy);

Eigen::MatrixXd elu(const Eigen::MatrixXd& x);
Eigen::MatrixXd elu_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy);

double softplus(double x);
double sigmoid(double x);

}  // namespace unmixlab::nn
