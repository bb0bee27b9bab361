#pragma once

#include "unmixlab/nn/layers.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace unmixlab::lcgu {

using nn::Parameter;
using nn::Tensor;

// Layer widths and patch geometry. Widths are configuration, not contract.
struct Architecture {
  int patch = 32;       // must be a multiple of 4
  int bands = 0;        // L
  int endmembers = 0;   // R
  std::array<int, 3> generator_channels{64, 128, 256};
  std::array<int, 3> discriminator_channels{64, 128, 256};
  std::array<int, 2> autoencoder_channels{64, 128};
  int mine_hidden = 64;
  int mine_block = 8;   // side of the local sub-patches paired by MINE

  void validate() const;
};

enum class OutputHead { Softmax, Sigmoid };

// Five-layer conv-deconv generator:
//   conv3x3/1 -> conv4x4/2 -> conv4x4/2 -> deconv4x4/2 -> deconv4x4/2
// followed by a 1x1 output head over [first-layer features, decoder output]
// with a per-pixel softmax (unmixing) or sigmoid (mixing).
class Generator {
 public:
  struct Trace {
    Tensor x, h1, h2, h3, h4, h5, skip, out;
  };

  Generator() = default;
  Generator(const std::string& name, int in_channels, int out_channels, std::array<int, 3> widths, OutputHead head);

  Tensor forward(const Tensor& x, Trace* trace = nullptr) const;
  // Returns dL/dx; accumulates parameter gradients when `accumulate` is set.
  Tensor backward(const Trace& trace, const Tensor& d_out, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters();
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
  OutputHead head_kind_ = OutputHead::Softmax;
  nn::Conv2d conv1_, conv2_, conv3_;
  nn::ConvTranspose2d up1_, up2_;
  nn::Conv2d head_;
};

// Three convolution stages and a fully connected logit. D(x) = sigmoid(logit).
class Discriminator {
 public:
  struct Trace {
    Tensor x, h1, h2, h3;
    Eigen::MatrixXd flat;
  };

  Discriminator() = default;
  Discriminator(const std::string& name, int in_channels, int patch, std::array<int, 3> widths);

  Eigen::VectorXd forward(const Tensor& x, Trace* trace = nullptr) const;  // logits, one per sample
  Tensor backward(const Trace& trace, const Eigen::VectorXd& d_logits, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters();

 private:
  nn::Conv2d conv1_, conv2_, conv3_;
  nn::Linear fc_;
};

// Convolutional autoencoder with sigmoid output, used as AE_p.
class Autoencoder {
 public:
  struct Trace {
    Tensor x, h1, h2, h3, out;
  };

  Autoencoder() = default;
  Autoencoder(const std::string& name, int channels, std::array<int, 2> widths);

  Tensor forward(const Tensor& x, Trace* trace = nullptr) const;
  Tensor backward(const Trace& trace, const Tensor& d_out, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters();

  long forward_calls() const { return calls_; }

 private:
  nn::Conv2d conv1_, conv2_;
  nn::ConvTranspose2d up1_, up2_;
  mutable long calls_ = 0;
};

// Two-layer fully connected statistics network T(u, v) for MINE. Each row of
// the input is one concatenated pair [u, v].
class MineNetwork {
 public:
  struct Trace {
    Eigen::MatrixXd x, h;
  };

  MineNetwork() = default;
  MineNetwork(const std::string& name, int in_features, int hidden);

  Eigen::VectorXd forward(const Eigen::MatrixXd& x, Trace* trace = nullptr) const;
  Eigen::MatrixXd backward(const Trace& trace, const Eigen::VectorXd& d_t, bool accumulate = true);

  void reset(std::mt19937_64& rng);
  std::vector<Parameter*> parameters();
  int in_features() const { return fc1_.in_features(); }

  long forward_calls() const { return calls_; }

 private:
  nn::Linear fc1_, fc2_;
  mutable long calls_ = 0;
};

// The endmember matrix resized to a patch: L channels, channel l at pixel
// (i, j) holds M(l, floor(j * R / patch)). Shape (1, L, patch, patch).
Tensor endmember_plane(const Eigen::MatrixXd& M, int patch);

// Linear mixture per pixel: (n, R, h, w) abundances -> (n, L, h, w).
Tensor linear_mixture(const Tensor& a, const Eigen::MatrixXd& M);
// Adjoint of linear_mixture w.r.t. the abundances.
Tensor linear_mixture_backward(const Tensor& d_x, const Eigen::MatrixXd& M);

// Repeats a (1, C, h, w) tensor n times along the batch axis.
Tensor broadcast_batch(const Tensor& t, int n);

}  // namespace unmixlab::lcgu
