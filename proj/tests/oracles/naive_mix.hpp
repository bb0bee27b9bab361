#pragma once

#include <cstddef>
#include <vector>

namespace unmixlab::oracle {

// Band-by-band evaluation of the forward models with plain loops.
// m[k][l] is band l of endmember k; gamma is packed over pairs i<j.
using Signatures = std::vector<std::vector<double>>;

inline std::vector<double> linear(const Signatures& m, const std::vector<double>& a) {
  std::vector<double> y(m[0].size(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k)
    for (std::size_t l = 0; l < y.size(); ++l) y[l] += a[k] * m[k][l];
  return y;
}

inline std::vector<double> bilinear(const Signatures& m, const std::vector<double>& a, const std::vector<double>& gamma) {
  std::vector<double> y = linear(m, a);
  std::size_t pair = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j, ++pair)
      for (std::size_t l = 0; l < y.size(); ++l) y[l] += gamma[pair] * a[i] * a[j] * m[i][l] * m[j][l];
  return y;
}

inline std::vector<double> polynomial(const Signatures& m, const std::vector<double>& a, double b) {
  std::vector<double> y = linear(m, a);
  for (double& v : y) v = v + b * v * v;
  return y;
}

inline std::vector<double> multilinear(const Signatures& m, const std::vector<double>& a, double p) {
  std::vector<double> y = linear(m, a);
  for (double& v : y) v = (1.0 - p) * v / (1.0 - p * v);
  return y;
}

}  // namespace unmixlab::oracle
