#pragma once

#include "unmixlab/nn/layers.hpp"

#include <cstdint>
#include <vector>

namespace unmixlab::nn {

struct AdamSettings {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamSettings settings);

  void zero_grad();
  void step();
  long steps() const { return t_; }
  const std::vector<Parameter*>& parameters() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamSettings settings_;
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

// FNV-1a over the raw bytes of every parameter value.
std::uint64_t hash_parameters(const std::vector<Parameter*>& params);

}  // namespace unmixlab::nn
