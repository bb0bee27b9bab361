#include "unmixlab/scene_synth.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>
#include <random>

namespace unmixlab {

void SceneRecipe::validate() const {
  if (height < 1 || width < 1) throw ConfigError("scene dimensions must be positive");
  if (endmember_names.empty()) throw ConfigError("scene recipe lists no endmembers");
  if (block_size < 1) throw ConfigError("block_size must be positive");
  if (smoothing_radius < 0) throw ConfigError("smoothing_radius must be non-negative");
  if (smoothing_radius >= std::min(height, width)) {
    throw ConfigError("smoothing_radius must be smaller than the scene's shorter side");
  }
  if (!dirichlet_alpha.empty()) {
    if (dirichlet_alpha.size() != endmember_names.size()) {
      throw ConfigError("dirichlet_alpha length differs from endmember count");
    }
    for (double a : dirichlet_alpha) {
      if (!(a > 0.0)) throw ConfigError("dirichlet_alpha entries must be positive");
    }
  }
}

AbundanceMap generate_abundance(const SceneRecipe& recipe) {
  recipe.validate();
  const int H = recipe.height;
  const int W = recipe.width;
  const int R = static_cast<int>(recipe.endmember_names.size());
  const int bs = recipe.block_size;
  const int rad = recipe.smoothing_radius;

  std::mt19937_64 rng(recipe.seed);
  const int block_rows = (H + bs - 1) / bs;
  const int block_cols = (W + bs - 1) / bs;
  // Balanced labels in random order: each block's label is still uniform
  // over endmembers, but the counts differ by at most one.
  std::vector<int> label(static_cast<std::size_t>(block_rows) * block_cols);
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = static_cast<int>(i % static_cast<std::size_t>(R));
  std::shuffle(label.begin(), label.end(), rng);

  // One-hot channels, then separable box mean over in-bounds neighbors.
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  std::vector<double> onehot(plane * R, 0.0);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const int k = label[static_cast<std::size_t>(r / bs) * block_cols + c / bs];
      onehot[k * plane + static_cast<std::size_t>(r) * W + c] = 1.0;
    }
  }

  std::vector<double> tmp(plane);
  std::vector<double> smooth(plane * R);
  for (int k = 0; k < R; ++k) {
    const double* src = onehot.data() + k * plane;
    double* dst = smooth.data() + k * plane;
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        const int c0 = std::max(0, c - rad), c1 = std::min(W - 1, c + rad);
        double s = 0.0;
        for (int cc = c0; cc <= c1; ++cc) s += src[static_cast<std::size_t>(r) * W + cc];
        tmp[static_cast<std::size_t>(r) * W + c] = s / (c1 - c0 + 1);
      }
    }
    for (int r = 0; r < H; ++r) {
      const int r0 = std::max(0, r - rad), r1 = std::min(H - 1, r + rad);
      for (int c = 0; c < W; ++c) {
        double s = 0.0;
        for (int rr = r0; rr <= r1; ++rr) s += tmp[static_cast<std::size_t>(rr) * W + c];
        dst[static_cast<std::size_t>(r) * W + c] = s / (r1 - r0 + 1);
      }
    }
  }

  AbundanceMap map(H, W, R);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * W + c;
      double total = 0.0;
      for (int k = 0; k < R; ++k) total += smooth[k * plane + idx];
      auto px = map.pixel(r, c);
      for (int k = 0; k < R; ++k) px[k] = static_cast<float>(smooth[k * plane + idx] / total);
    }
  }
  map.provenance = "generate_abundance;seed=" + std::to_string(recipe.seed);
  return map;
}

std::vector<Eigen::VectorXd> sample_dirichlet(const Eigen::VectorXd& alpha, std::size_t count,
                                              std::uint64_t seed) {
  if (alpha.size() < 1) throw ConfigError("dirichlet alpha is empty");
  if (!(alpha.array() > 0.0).all() || !alpha.allFinite()) {
    throw ConfigError("dirichlet alpha entries must be positive and finite");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) gammas.emplace_back(alpha(i), 1.0);

  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  Eigen::VectorXd g(alpha.size());
  while (out.size() < count) {
    for (Eigen::Index i = 0; i < alpha.size(); ++i) g(i) = gammas[static_cast<std::size_t>(i)](rng);
    const double total = g.sum();
    if (total > 0.0) out.push_back(g / total);  // all-zero draws happen only for tiny alpha
  }
  return out;
}

Scene synthesize_scene(const SceneRecipe& recipe, const EndmemberMatrix& M, const MixingModelSpec& spec,
                       double snr_db) {
  if (static_cast<int>(recipe.endmember_names.size()) != M.count()) {
    throw ConfigError("recipe names " + std::to_string(recipe.endmember_names.size()) +
                      " endmembers but M has " + std::to_string(M.count()));
  }
  Scene scene;
  scene.abundance = generate_abundance(recipe);
  SpectralCube clean = mix_cube(scene.abundance, M, spec);
  // Noise stream is decorrelated from the abundance stream.
  const std::uint64_t noise_seed = recipe.seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull;
  scene.cube = add_noise(clean, snr_db, noise_seed);
  return scene;
}

}  // namespace unmixlab
