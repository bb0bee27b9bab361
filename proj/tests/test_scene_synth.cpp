#include "support/temp_dir.hpp"
#include "unmixlab/error.hpp"
#include "unmixlab/scene_synth.hpp"
#include "unmixlab/spectra_io.hpp"

#include <gtest/gtest.h>

#include <random>

namespace unmixlab {
namespace {

SceneRecipe small_recipe(int r, int radius, std::uint64_t seed) {
  SceneRecipe s;
  s.height = 64;
  s.width = 64;
  s.block_size = 16;
  s.smoothing_radius = radius;
  s.seed = seed;
  for (int k = 0; k < r; ++k) s.endmember_names.push_back("em" + std::to_string(k));
  return s;
}

TEST(Dirichlet, SamplesLieOnSimplex) {
  for (const auto& v : sample_dirichlet(Eigen::VectorXd::Ones(4), 2000, 1)) {
    EXPECT_NEAR(v.sum(), 1.0, 1e-12);
    EXPECT_GE(v.minCoeff(), 0.0);
  }
}

TEST(Dirichlet, EmpiricalMeanMatchesAnalytic) {
  const auto s = sample_dirichlet(Eigen::Vector3d(2, 1, 1), 100000, 2);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : s) mean += v;
  mean /= static_cast<double>(s.size());
  EXPECT_NEAR(mean(0), 0.5, 0.01);
  EXPECT_NEAR(mean(1), 0.25, 0.01);
  EXPECT_NEAR(mean(2), 0.25, 0.01);
}

TEST(Dirichlet, LargeConcentrationPilesUpOnFirstVertex) {
  const auto s = sample_dirichlet(Eigen::Vector3d(1000, 1, 1), 5000, 3);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : s) mean += v;
  mean /= static_cast<double>(s.size());
  EXPECT_NEAR(mean(0), 1000.0 / 1002.0, 0.01);
  EXPECT_NEAR(mean(1), 1.0 / 1002.0, 0.01);
  EXPECT_NEAR(mean(2), 1.0 / 1002.0, 0.01);
}

TEST(Dirichlet, DeterministicAndValidated) {
  const auto a = sample_dirichlet(Eigen::Vector3d(1, 2, 3), 10, 4);
  const auto b = sample_dirichlet(Eigen::Vector3d(1, 2, 3), 10, 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_THROW(sample_dirichlet(Eigen::Vector3d(1, 0, 1), 1, 0), ConfigError);
  EXPECT_THROW(sample_dirichlet(Eigen::Vector3d(1, -2, 1), 1, 0), ConfigError);
}

TEST(Abundance, NoSmoothingGivesPureBlocks) {
  const AbundanceMap a = generate_abundance(small_recipe(3, 0, 5));
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const Eigen::VectorXd v = a.pixel_vector(i, j);
      EXPECT_EQ(v.maxCoeff(), 1.0);
      EXPECT_EQ(v.sum(), 1.0);
      // Constant within each 16x16 block.
      EXPECT_EQ(v, a.pixel_vector(i / 16 * 16, j / 16 * 16));
    }
}

TEST(Abundance, AlwaysOnSimplex) {
  for (int radius : {0, 1, 3, 6, 15})
    for (std::uint64_t seed : {1u, 2u}) EXPECT_NO_THROW(generate_abundance(small_recipe(4, radius, seed)).validate(1e-6));
}

TEST(Abundance, SmoothedBoundariesAreMixed) {
  const AbundanceMap a = generate_abundance(small_recipe(3, 4, 6));
  const AbundanceMap blocks = generate_abundance(small_recipe(3, 0, 6));
  int boundaries = 0;
  for (int i = 0; i < 64; ++i)
    for (int j = 15; j < 63; j += 16)
      if (blocks.pixel_vector(i, j) != blocks.pixel_vector(i, j + 1)) {
        ++boundaries;
        EXPECT_LT(a.pixel_vector(i, j).maxCoeff(), 1.0);
        EXPECT_LT(a.pixel_vector(i, j + 1).maxCoeff(), 1.0);
      }
  EXPECT_GT(boundaries, 0);
}

TEST(Abundance, NeighboursCloserThanRandomPairs) {
  const AbundanceMap a = generate_abundance(small_recipe(4, 3, 7));
  double near = 0, far = 0;
  int nn = 0, nf = 0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j + 1 < 64; ++j, ++nn) near += (a.pixel_vector(i, j) - a.pixel_vector(i, j + 1)).cwiseAbs().mean();
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> u(0, 63);
  for (; nf < 20000; ++nf) far += (a.pixel_vector(u(rng), u(rng)) - a.pixel_vector(u(rng), u(rng))).cwiseAbs().mean();
  EXPECT_LT(near / nn, far / nf);
}

TEST(Abundance, FullSceneMeanPerEndmember) {
  SceneRecipe r;
  r.endmember_names = {"a", "b", "c", "d", "e"};
  r.seed = 9;
  const AbundanceMap a = generate_abundance(r);
  ASSERT_EQ(a.height(), 250);
  ASSERT_EQ(a.endmembers(), 5);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 250; ++i)
    for (int j = 0; j < 250; ++j) mean += a.pixel_vector(i, j);
  mean /= 250.0 * 250.0;
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(mean(k), 0.2, 0.05) << k;
}

TEST(Abundance, RecipeValidation) {
  SceneRecipe r = small_recipe(3, 64, 1);
  EXPECT_THROW(generate_abundance(r), ConfigError);
  r = small_recipe(3, 2, 1);
  r.dirichlet_alpha = {1, 1};
  EXPECT_THROW(generate_abundance(r), ConfigError);
  r.dirichlet_alpha = {1, 0, 1};
  EXPECT_THROW(generate_abundance(r), ConfigError);
}

TEST(Abundance, DeterministicPerSeed) {
  EXPECT_EQ(generate_abundance(small_recipe(3, 2, 10)).values(), generate_abundance(small_recipe(3, 2, 10)).values());
  EXPECT_NE(generate_abundance(small_recipe(3, 2, 10)).values(), generate_abundance(small_recipe(3, 2, 11)).values());
}

TEST(Synthesize, FullSizeShapes) {
  SceneRecipe r;
  r.endmember_names = {"Alunite", "Calcite", "Epidote", "Kaolinite", "Buddingtonite"};
  const EndmemberMatrix m = load_endmember_library(testing::data_dir() / "mineral_library.csv", r.endmember_names);
  MixingModelSpec spec;
  const Scene s = synthesize_scene(r, m, spec, 30.0);
  EXPECT_EQ(s.cube.height(), 250);
  EXPECT_EQ(s.cube.width(), 250);
  EXPECT_EQ(s.cube.bands(), 420);
  EXPECT_EQ(s.abundance.endmembers(), 5);
}

TEST(Synthesize, CleanLinearSceneIsExactlyReconstructible) {
  SceneRecipe r = small_recipe(3, 4, 12);
  r.endmember_names = {"Alunite", "Calcite", "Epidote"};
  const EndmemberMatrix m =
      resample_bands(load_endmember_library(testing::data_dir() / "mineral_library.csv", r.endmember_names), 64);
  const Scene s = synthesize_scene(r, m, MixingModelSpec{}, kNoNoise);
  EXPECT_EQ(s.cube.bands(), 64);
  EXPECT_EQ(s.abundance.endmembers(), 3);
  double worst = 0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      worst = std::max(worst, (m.signatures * s.abundance.pixel_vector(i, j) - s.cube.pixel_vector(i, j)).cwiseAbs().maxCoeff());
  EXPECT_LT(worst, 1e-6);
  EXPECT_THROW(synthesize_scene(small_recipe(2, 1, 1), m, MixingModelSpec{}, kNoNoise), ConfigError);
}

}  // namespace
}  // namespace unmixlab
