#include "unmixlab/nn/adam.hpp"

#include "unmixlab/error.hpp"

#include <cmath>
#include <cstring>

namespace unmixlab::nn {

Adam::Adam(std::vector<Parameter*> params, AdamSettings settings)
    : params_(std::move(params)), settings_(settings) {
  if (!(settings_.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
  if (!(settings_.beta1 >= 0.0 && settings_.beta1 < 1.0)) throw ConfigError("Adam beta1 must lie in [0,1)");
  if (!(settings_.beta2 >= 0.0 && settings_.beta2 < 1.0)) throw ConfigError("Adam beta2 must lie in [0,1)");
  for (const Parameter* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = settings_.learning_rate;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m_[i].array() / correction1) /
                       ((v_[i].array() / correction2).sqrt() + settings_.epsilon);
  }
}

std::uint64_t hash_parameters(const std::vector<Parameter*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Parameter* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    const std::size_t n = static_cast<std::size_t>(p->value.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace unmixlab::nn
