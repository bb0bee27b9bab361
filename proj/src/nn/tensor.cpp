#include "unmixlab/nn/tensor.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace unmixlab::nn {

std::string Tensor::shape_string() const {
  std::ostringstream s;
  s << '(' << n << ", " << c << ", " << h << ", " << w << ')';
  return s.str();
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o)) throw DataError("tensor add: shape " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw DataError("concat_channels: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor out(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy_n(a.sample(i), a.sample_size(), out.sample(i));
    std::copy_n(b.sample(i), b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.c) throw DataError("slice_channels: range out of bounds");
  Tensor out(t.n, count, t.h, t.w);
  for (int i = 0; i < t.n; ++i) {
    std::copy_n(t.sample(i) + static_cast<std::size_t>(first) * t.plane(), out.sample_size(), out.sample(i));
  }
  return out;
}

double l1_mean(const Tensor& a, const Tensor& b, Tensor* grad_a) {
  if (!a.same_shape(b)) throw DataError("l1_mean: " + a.shape_string() + " vs " + b.shape_string());
  const double inv = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  if (grad_a) *grad_a = Tensor(a.n, a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    total += std::abs(d);
    if (grad_a) grad_a->data[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  return total * inv;
}

}  // namespace unmixlab::nn
