#include "unmixlab/lcgu/networks.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>

namespace unmixlab::lcgu {
namespace {

constexpr nn::ConvGeometry kDown{4, 2, 1};
constexpr nn::ConvGeometry kSame3{3, 1, 1};
constexpr nn::ConvGeometry kPointwise{1, 1, 0};

template <class... Layers>
std::vector<Parameter*> collect(Layers&... layers) {
  std::vector<Parameter*> out;
  (
      [&] {
        for (Parameter* p : layers.parameters()) out.push_back(p);
      }(),
      ...);
  return out;
}

}  // namespace

void Architecture::validate() const {
  if (patch < 4 || patch % 4 != 0) throw ConfigError("patch size must be a positive multiple of 4");
  if (bands < 1) throw ConfigError("architecture needs the band count L");
  if (endmembers < 2) throw ConfigError("architecture needs at least two endmembers");
  for (int w : generator_channels)
    if (w < 1) throw ConfigError("generator widths must be positive");
  for (int w : discriminator_channels)
    if (w < 1) throw ConfigError("discriminator widths must be positive");
  for (int w : autoencoder_channels)
    if (w < 1) throw ConfigError("autoencoder widths must be positive");
  if (mine_hidden < 1) throw ConfigError("mine_hidden must be positive");
  if (mine_block < 1 || patch % mine_block != 0) throw ConfigError("mine_block must divide the patch size");
}

// ---------------------------------------------------------------- Generator

Generator::Generator(const std::string& name, int in_channels, int out_channels, std::array<int, 3> widths,
                     OutputHead head)
    : in_(in_channels),
      out_(out_channels),
      head_kind_(head),
      conv1_(name + ".conv1", in_channels, widths[0], kSame3),
      conv2_(name + ".conv2", widths[0], widths[1], kDown),
      conv3_(name + ".conv3", widths[1], widths[2], kDown),
      up1_(name + ".deconv1", widths[2], widths[1], kDown),
      up2_(name + ".deconv2", widths[1], widths[0], kDown),
      head_(name + ".head", 2 * widths[0], out_channels, kPointwise) {}

void Generator::reset(std::mt19937_64& rng) {
  conv1_.reset(rng);
  conv2_.reset(rng);
  conv3_.reset(rng);
  up1_.reset(rng);
  up2_.reset(rng);
  head_.reset(rng);
}

std::vector<Parameter*> Generator::parameters() { return collect(conv1_, conv2_, conv3_, up1_, up2_, head_); }

Tensor Generator::forward(const Tensor& x, Trace* trace) const {
  if (x.h % 4 != 0 || x.w % 4 != 0) throw DataError("generator input sides must be multiples of 4");
  Tensor h1 = nn::relu(conv1_.forward(x));
  Tensor h2 = nn::relu(conv2_.forward(h1));
  Tensor h3 = nn::relu(conv3_.forward(h2));
  Tensor h4 = nn::relu(up1_.forward(h3));
  Tensor h5 = nn::relu(up2_.forward(h4));
  Tensor skip = concat_channels(h1, h5);
  Tensor logits = head_.forward(skip);
  Tensor out = head_kind_ == OutputHead::Softmax ? nn::channel_softmax(logits) : nn::sigmoid(logits);
  if (trace) {
    trace->x = x;
    trace->h1 = std::move(h1);
    trace->h2 = std::move(h2);
    trace->h3 = std::move(h3);
    trace->h4 = std::move(h4);
    trace->h5 = std::move(h5);
    trace->skip = std::move(skip);
    trace->out = out;
  }
  return out;
}

Tensor Generator::backward(const Trace& t, const Tensor& d_out, bool accumulate) {
  const Tensor d_logits = head_kind_ == OutputHead::Softmax ? nn::channel_softmax_backward(t.out, d_out)
                                                            : nn::sigmoid_backward(t.out, d_out);
  const Tensor d_skip = head_.backward(t.skip, d_logits, accumulate);
  Tensor d_h1 = slice_channels(d_skip, 0, t.h1.c);
  const Tensor d_h5 = slice_channels(d_skip, t.h1.c, t.h5.c);
  const Tensor d_h4 = up2_.backward(t.h4, nn::relu_backward(t.h5, d_h5), accumulate);
  const Tensor d_h3 = up1_.backward(t.h3, nn::relu_backward(t.h4, d_h4), accumulate);
  const Tensor d_h2 = conv3_.backward(t.h2, nn::relu_backward(t.h3, d_h3), accumulate);
  d_h1 += conv2_.backward(t.h1, nn::relu_backward(t.h2, d_h2), accumulate);
  return conv1_.backward(t.x, nn::relu_backward(t.h1, d_h1), accumulate);
}

// ------------------------------------------------------------ Discriminator

Discriminator::Discriminator(const std::string& name, int in_channels, int patch, std::array<int, 3> widths)
    : conv1_(name + ".conv1", in_channels, widths[0], kDown),
      conv2_(name + ".conv2", widths[0], widths[1], kDown),
      conv3_(name + ".conv3", widths[1], widths[2], kSame3),
      fc_(name + ".fc", widths[2] * (patch / 4) * (patch / 4), 1) {}

void Discriminator::reset(std::mt19937_64& rng) {
  conv1_.reset(rng);
  conv2_.reset(rng);
  conv3_.reset(rng);
  fc_.reset(rng);
}

std::vector<Parameter*> Discriminator::parameters() { return collect(conv1_, conv2_, conv3_, fc_); }

Eigen::VectorXd Discriminator::forward(const Tensor& x, Trace* trace) const {
  Tensor h1 = nn::leaky_relu(conv1_.forward(x));
  Tensor h2 = nn::leaky_relu(conv2_.forward(h1));
  Tensor h3 = nn::leaky_relu(conv3_.forward(h2));
  const Eigen::Map<const nn::RowMatrix> flat_view(h3.data.data(), h3.n, static_cast<Eigen::Index>(h3.sample_size()));
  Eigen::MatrixXd flat = flat_view;
  if (flat.cols() != fc_.in_features()) throw DataError("discriminator input does not match its patch size");
  Eigen::VectorXd logits = fc_.forward(flat).col(0);
  if (trace) {
    trace->x = x;
    trace->h1 = std::move(h1);
    trace->h2 = std::move(h2);
    trace->h3 = std::move(h3);
    trace->flat = std::move(flat);
  }
  return logits;
}

Tensor Discriminator::backward(const Trace& t, const Eigen::VectorXd& d_logits, bool accumulate) {
  const Eigen::MatrixXd d_flat = fc_.backward(t.flat, d_logits, accumulate);
  Tensor d_h3(t.h3.n, t.h3.c, t.h3.h, t.h3.w);
  Eigen::Map<nn::RowMatrix>(d_h3.data.data(), d_h3.n, static_cast<Eigen::Index>(d_h3.sample_size())) = d_flat;
  const Tensor d_h2 = conv3_.backward(t.h2, nn::leaky_relu_backward(t.h3, d_h3), accumulate);
  const Tensor d_h1 = conv2_.backward(t.h1, nn::leaky_relu_backward(t.h2, d_h2), accumulate);
  return conv1_.backward(t.x, nn::leaky_relu_backward(t.h1, d_h1), accumulate);
}

// -------------------------------------------------------------- Autoencoder

Autoencoder::Autoencoder(const std::string& name, int channels, std::array<int, 2> widths)
    : conv1_(name + ".conv1", channels, widths[0], kDown),
      conv2_(name + ".conv2", widths[0], widths[1], kDown),
      up1_(name + ".deconv1", widths[1], widths[0], kDown),
      up2_(name + ".deconv2", widths[0], channels, kDown) {}

void Autoencoder::reset(std::mt19937_64& rng) {
  conv1_.reset(rng);
  conv2_.reset(rng);
  up1_.reset(rng);
  up2_.reset(rng);
}

std::vector<Parameter*> Autoencoder::parameters() { return collect(conv1_, conv2_, up1_, up2_); }

Tensor Autoencoder::forward(const Tensor& x, Trace* trace) const {
  ++calls_;
  Tensor h1 = nn::relu(conv1_.forward(x));
  Tensor h2 = nn::relu(conv2_.forward(h1));
  Tensor h3 = nn::relu(up1_.forward(h2));
  Tensor out = nn::sigmoid(up2_.forward(h3));
  if (trace) {
    trace->x = x;
    trace->h1 = std::move(h1);
    trace->h2 = std::move(h2);
    trace->h3 = std::move(h3);
    trace->out = out;
  }
  return out;
}

Tensor Autoencoder::backward(const Trace& t, const Tensor& d_out, bool accumulate) {
  const Tensor d_h3 = up2_.backward(t.h3, nn::sigmoid_backward(t.out, d_out), accumulate);
  const Tensor d_h2 = up1_.backward(t.h2, nn::relu_backward(t.h3, d_h3), accumulate);
  const Tensor d_h1 = conv2_.backward(t.h1, nn::relu_backward(t.h2, d_h2), accumulate);
  return conv1_.backward(t.x, nn::relu_backward(t.h1, d_h1), accumulate);
}

// -------------------------------------------------------------------- MINE

MineNetwork::MineNetwork(const std::string& name, int in_features, int hidden)
    : fc1_(name + ".fc1", in_features, hidden), fc2_(name + ".fc2", hidden, 1) {}

void MineNetwork::reset(std::mt19937_64& rng) {
  fc1_.reset(rng);
  fc2_.reset(rng);
}

std::vector<Parameter*> MineNetwork::parameters() { return collect(fc1_, fc2_); }

Eigen::VectorXd MineNetwork::forward(const Eigen::MatrixXd& x, Trace* trace) const {
  ++calls_;
  Eigen::MatrixXd h = nn::elu(fc1_.forward(x));
  Eigen::VectorXd t = fc2_.forward(h).col(0);
  if (trace) {
    trace->x = x;
    trace->h = std::move(h);
  }
  return t;
}

Eigen::MatrixXd MineNetwork::backward(const Trace& trace, const Eigen::VectorXd& d_t, bool accumulate) {
  const Eigen::MatrixXd d_h = fc2_.backward(trace.h, d_t, accumulate);
  return fc1_.backward(trace.x, nn::elu_backward(trace.h, d_h), accumulate);
}

// ------------------------------------------------------------------ helpers

Tensor endmember_plane(const Eigen::MatrixXd& M, int patch) {
  const int L = static_cast<int>(M.rows());
  const int R = static_cast<int>(M.cols());
  Tensor plane(1, L, patch, patch);
  for (int l = 0; l < L; ++l)
    for (int i = 0; i < patch; ++i)
      for (int j = 0; j < patch; ++j) plane.at(0, l, i, j) = M(l, std::min(R - 1, j * R / patch));
  return plane;
}

Tensor linear_mixture(const Tensor& a, const Eigen::MatrixXd& M) {
  if (a.c != M.cols()) throw DataError("linear_mixture: abundance channels differ from endmember count");
  Tensor x(a.n, static_cast<int>(M.rows()), a.h, a.w);
  for (int b = 0; b < a.n; ++b) x.sample_matrix(b).noalias() = M * a.sample_matrix(b);
  return x;
}

Tensor linear_mixture_backward(const Tensor& d_x, const Eigen::MatrixXd& M) {
  Tensor d_a(d_x.n, static_cast<int>(M.cols()), d_x.h, d_x.w);
  for (int b = 0; b < d_x.n; ++b) d_a.sample_matrix(b).noalias() = M.transpose() * d_x.sample_matrix(b);
  return d_a;
}

Tensor broadcast_batch(const Tensor& t, int n) {
  Tensor out(n, t.c, t.h, t.w);
  for (int b = 0; b < n; ++b) std::copy_n(t.sample(0), t.sample_size(), out.sample(b));
  return out;
}

}  // namespace unmixlab::lcgu
