#include "unmixlab/nn/layers.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>
#include <cmath>

namespace unmixlab::nn {
namespace {

// Unfolds one (C, H, W) sample into a (C*k*k, Ho*Wo) column matrix.
void im2col(const double* img, int C, int H, int W, const ConvGeometry& g, int Ho, int Wo, RowMatrix& cols) {
  const int k = g.kernel;
  cols.resize(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(Ho) * Wo);
  for (int ch = 0; ch < C; ++ch) {
    const double* plane = img + static_cast<std::size_t>(ch) * H * W;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((static_cast<std::size_t>(ch) * k + ky) * k + kx) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[oy * Wo + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < W) ? plane[iy * W + ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters columns back onto a (C, H, W) image (+=).
void col2im(const RowMatrix& cols, int C, int H, int W, const ConvGeometry& g, int Ho, int Wo, double* img) {
  const int k = g.kernel;
  for (int ch = 0; ch < C; ++ch) {
    double* plane = img + static_cast<std::size_t>(ch) * H * W;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.data() + ((static_cast<std::size_t>(ch) * k + ky) * k + kx) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < W) plane[iy * W + ix] += row[oy * Wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

void init_he_uniform(Parameter& p, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max(1, fan_in)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < p.value.cols(); ++j)
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = dist(rng);
  p.zero_grad();
}

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry)
    : in_(in_channels), out_(out_channels), geom_(geometry) {
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.value = Eigen::MatrixXd::Zero(out_, static_cast<Eigen::Index>(in_) * geom_.kernel * geom_.kernel);
  bias_.value = Eigen::MatrixXd::Zero(out_, 1);
  weight_.zero_grad();
  bias_.zero_grad();
}

void Conv2d::reset(std::mt19937_64& rng) {
  init_he_uniform(weight_, in_ * geom_.kernel * geom_.kernel, rng);
  bias_.value.setZero();
  bias_.zero_grad();
}

Tensor Conv2d::forward(const Tensor& x) const {
  if (x.c != in_) throw DataError(weight_.name + ": expected " + std::to_string(in_) + " channels, got " + x.shape_string());
  const int Ho = output_size(x.h), Wo = output_size(x.w);
  if (Ho < 1 || Wo < 1) throw DataError(weight_.name + ": input " + x.shape_string() + " too small");
  Tensor y(x.n, out_, Ho, Wo);
  RowMatrix cols;
  for (int b = 0; b < x.n; ++b) {
    im2col(x.sample(b), x.c, x.h, x.w, geom_, Ho, Wo, cols);
    auto out = y.sample_matrix(b);
    out.noalias() = weight_.value * cols;
    out.colwise() += bias_.value.col(0);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, bool accumulate) {
  const int Ho = dy.h, Wo = dy.w;
  Tensor dx(x.n, x.c, x.h, x.w);
  RowMatrix cols, dcols;
  for (int b = 0; b < x.n; ++b) {
    const auto g = dy.sample_matrix(b);
    if (accumulate) {
      im2col(x.sample(b), x.c, x.h, x.w, geom_, Ho, Wo, cols);
      weight_.grad.noalias() += g * cols.transpose();
      bias_.grad.col(0) += g.rowwise().sum();
    }
    dcols.noalias() = weight_.value.transpose() * g;
    col2im(dcols, x.c, x.h, x.w, geom_, Ho, Wo, dx.sample(b));
  }
  return dx;
}

ConvTranspose2d::ConvTranspose2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry)
    : in_(in_channels), out_(out_channels), geom_(geometry) {
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.value = Eigen::MatrixXd::Zero(in_, static_cast<Eigen::Index>(out_) * geom_.kernel * geom_.kernel);
  bias_.value = Eigen::MatrixXd::Zero(out_, 1);
  weight_.zero_grad();
  bias_.zero_grad();
}

void ConvTranspose2d::reset(std::mt19937_64& rng) {
  // Each output pixel sees in * (kernel / stride)^2 inputs.
  const int taps = std::max(1, geom_.kernel / geom_.stride);
  init_he_uniform(weight_, in_ * taps * taps, rng);
  bias_.value.setZero();
  bias_.zero_grad();
}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  if (x.c != in_) throw DataError(weight_.name + ": expected " + std::to_string(in_) + " channels, got " + x.shape_string());
  const int Ho = output_size(x.h), Wo = output_size(x.w);
  Tensor y(x.n, out_, Ho, Wo);
  RowMatrix cols;
  for (int b = 0; b < x.n; ++b) {
    cols.noalias() = weight_.value.transpose() * x.sample_matrix(b);
    col2im(cols, out_, Ho, Wo, geom_, x.h, x.w, y.sample(b));
    y.sample_matrix(b).colwise() += bias_.value.col(0);
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& x, const Tensor& dy, bool accumulate) {
  Tensor dx(x.n, x.c, x.h, x.w);
  RowMatrix dcols;
  for (int b = 0; b < x.n; ++b) {
    im2col(dy.sample(b), out_, dy.h, dy.w, geom_, x.h, x.w, dcols);
    dx.sample_matrix(b).noalias() = weight_.value * dcols;
    if (accumulate) {
      weight_.grad.noalias() += x.sample_matrix(b) * dcols.transpose();
      bias_.grad.col(0) += dy.sample_matrix(b).rowwise().sum();
    }
  }
  return dx;
}

Linear::Linear(std::string name, int in_features, int out_features) : in_(in_features), out_(out_features) {
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.value = Eigen::MatrixXd::Zero(out_, in_);
  bias_.value = Eigen::MatrixXd::Zero(out_, 1);
  weight_.zero_grad();
  bias_.zero_grad();
}

void Linear::reset(std::mt19937_64& rng) {
  init_he_uniform(weight_, in_, rng);
  bias_.value.setZero();
  bias_.zero_grad();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != in_) throw DataError(weight_.name + ": expected " + std::to_string(in_) + " features");
  Eigen::MatrixXd y = x * weight_.value.transpose();
  y.rowwise() += bias_.value.col(0).transpose();
  return y;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy, bool accumulate) {
  if (accumulate) {
    weight_.grad.noalias() += dy.transpose() * x;
    bias_.grad.col(0) += dy.colwise().sum().transpose();
  }
  return dy * weight_.value;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(y.data[i] > 0.0)) dx.data[i] = 0.0;
  return dx;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : slope * v;
  return y;
}

Tensor leaky_relu_backward(const Tensor& y, const Tensor& dy, double slope) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(y.data[i] > 0.0)) dx.data[i] *= slope;
  return dx;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = sigmoid(v);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (1.0 - y.data[i]);
  return dx;
}

Tensor channel_softmax(const Tensor& x) {
  Tensor y(x.n, x.c, x.h, x.w);
  const std::size_t plane = x.plane();
  for (int b = 0; b < x.n; ++b) {
    const double* src = x.sample(b);
    double* dst = y.sample(b);
    for (std::size_t p = 0; p < plane; ++p) {
      double mx = src[p];
      for (int k = 1; k < x.c; ++k) mx = std::max(mx, src[k * plane + p]);
      double total = 0.0;
      for (int k = 0; k < x.c; ++k) total += (dst[k * plane + p] = std::exp(src[k * plane + p] - mx));
      for (int k = 0; k < x.c; ++k) dst[k * plane + p] /= total;
    }
  }
  return y;
}

Tensor channel_softmax_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx(y.n, y.c, y.h, y.w);
  const std::size_t plane = y.plane();
  for (int b = 0; b < y.n; ++b) {
    const double* s = y.sample(b);
    const double* g = dy.sample(b);
    double* d = dx.sample(b);
    for (std::size_t p = 0; p < plane; ++p) {
      double dot = 0.0;
      for (int k = 0; k < y.c; ++k) dot += s[k * plane + p] * g[k * plane + p];
      for (int k = 0; k < y.c; ++k) d[k * plane + p] = s[k * plane + p] * (g[k * plane + p] - dot);
    }
  }
  return dx;
}

Eigen::MatrixXd elu(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

Eigen::MatrixXd elu_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
  return dy.cwiseProduct(y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : v + 1.0; }));
}

}  // namespace unmixlab::nn
