#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace unmixlab::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Batch of feature maps in NCHW order.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_string() const;

  double& at(int b, int ch, int y, int x) {
    return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }
  double at(int b, int ch, int y, int x) const {
    return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }

  double* sample(int b) { return data.data() + b * sample_size(); }
  const double* sample(int b) const { return data.data() + b * sample_size(); }

  // Sample b viewed as a (channels x pixels) matrix.
  Eigen::Map<RowMatrix> sample_matrix(int b) { return {sample(b), c, h * w}; }
  Eigen::Map<const RowMatrix> sample_matrix(int b) const { return {sample(b), c, h * w}; }

  Tensor& operator+=(const Tensor& o);
};

// Channel concatenation of two tensors with equal n, h, w.
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits channel range [first, first + count).
Tensor slice_channels(const Tensor& t, int first, int count);

// Mean absolute difference and its gradient w.r.t. `a` (sign / N).
double l1_mean(const Tensor& a, const Tensor& b, Tensor* grad_a = nullptr);

}  // namespace unmixlab::nn
