#pragma once

#include "unmixlab/cube.hpp"
#include "unmixlab/mixing_models.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace unmixlab {

struct SceneRecipe {
  int height = 250;
  int width = 250;
  std::vector<std::string> endmember_names;
  int block_size = 25;
  int smoothing_radius = 6;
  std::vector<double> dirichlet_alpha;  // empty means all ones
  std::uint64_t seed = 0;

  void validate() const;
};

// Blockwise pure labels, box low-pass per channel, then per-pixel
// renormalization to the simplex.
AbundanceMap generate_abundance(const SceneRecipe& recipe);

// Gamma-ratio construction.
std::vector<Eigen::VectorXd> sample_dirichlet(const Eigen::VectorXd& alpha, std::size_t count,
                                              std::uint64_t seed);

struct Scene {
  SpectralCube cube;
  AbundanceMap abundance;
};

// generate_abundance -> mix_cube -> add_noise. Pass kNoNoise for a clean scene.
Scene synthesize_scene(const SceneRecipe& recipe, const EndmemberMatrix& M, const MixingModelSpec& spec,
                       double snr_db);

}  // namespace unmixlab
