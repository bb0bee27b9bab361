#include "unmixlab/error.hpp"
#include "unmixlab/metrics.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace unmixlab {
namespace {

AbundanceMap one_pixel(std::initializer_list<float> v) {
  AbundanceMap a(1, 1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), a.values().begin());
  return a;
}

AbundanceMap random_map(int h, int w, int r, unsigned seed) {
  AbundanceMap a(h, w, r);
  std::mt19937 rng(seed);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      Eigen::VectorXd v(r);
      for (int k = 0; k < r; ++k) v(k) = e(rng);
      a.set_pixel(i, j, v / v.sum());
    }
  return a;
}

SpectralCube random_cube(int h, int w, int l, unsigned seed) {
  SpectralCube c(h, w, l);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.05f, 1.0f);
  for (float& v : c.values()) v = u(rng);
  return c;
}

TEST(Aad, HandValues) {
  EXPECT_EQ(aad(one_pixel({0.5f, 0.5f}), one_pixel({0.5f, 0.5f})), 0.0);
  EXPECT_NEAR(aad(one_pixel({1, 0}), one_pixel({0, 1})), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(aad(one_pixel({0.5f, 0.5f}), one_pixel({0.8f, 0.2f})), 0.5404, 1e-4);
  EXPECT_NEAR(aad(one_pixel({0.5f, 0.5f}), one_pixel({0.8f, 0.2f})), std::acos(0.5 / (std::sqrt(0.5) * std::sqrt(0.68))),
              1e-7);
}

TEST(Aad, IdentityRangeAndPixelPermutation) {
  const AbundanceMap a = random_map(6, 5, 4, 1), b = random_map(6, 5, 4, 2);
  EXPECT_NEAR(aad(a, a), 0.0, 1e-7);
  const double d = aad(a, b);
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, std::numbers::pi);
  AbundanceMap pa(5, 6, 4), pb(5, 6, 4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) {
      pa.set_pixel(j, i, a.pixel_vector(i, j));
      pb.set_pixel(j, i, b.pixel_vector(i, j));
    }
  EXPECT_NEAR(aad(pa, pb), d, 1e-12);
  EXPECT_THROW(aad(a, random_map(6, 5, 3, 3)), DataError);
}

TEST(Aid, HandValueSymmetryAndZero) {
  EXPECT_NEAR(aid(one_pixel({0.5f, 0.5f}), one_pixel({0.9f, 0.1f})), 0.4 * std::log(9.0), 1e-6);
  EXPECT_NEAR(aid(one_pixel({0.5f, 0.5f}), one_pixel({0.9f, 0.1f})), 0.8789, 1e-4);
  const AbundanceMap a = random_map(4, 4, 3, 4), b = random_map(4, 4, 3, 5);
  EXPECT_DOUBLE_EQ(aid(a, b), aid(b, a));
  EXPECT_EQ(aid(a, a), 0.0);
  EXPECT_GT(aid(a, b), 0.0);
}

TEST(Aid, ZeroEntriesAreFloored) {
  const double d = aid(one_pixel({1, 0}), one_pixel({0, 1}));
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(d, 2.0 * (1.0 - kAidFloor) * std::log((1.0 - 0.0) / kAidFloor), 1e-6);
}

TEST(Sad, IdentityScaleInvarianceAndOrthogonality) {
  const SpectralCube y = random_cube(3, 4, 7, 6);
  SpectralCube twice = y;
  for (float& v : twice.values()) v *= 2.0f;
  EXPECT_NEAR(sad(y, y), 0.0, 1e-3);
  EXPECT_NEAR(sad(y, twice), 0.0, 1e-3);
  SpectralCube u(1, 1, 2), v(1, 1, 2);
  u.values() = {1.0f, 0.0f};
  v.values() = {0.0f, 3.0f};
  EXPECT_NEAR(sad(u, v), std::numbers::pi / 2, 1e-15);
  SpectralCube zero(1, 1, 2);
  EXPECT_THROW(sad(u, zero), DataError);
}

TEST(Sad, PerPixelPositiveScalingOfEitherSide) {
  const SpectralCube y = random_cube(4, 4, 6, 7), z = random_cube(4, 4, 6, 8);
  SpectralCube zs = z;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (float& v : zs.pixel(i, j)) v *= 0.5f + static_cast<float>(i + j);
  EXPECT_NEAR(sad(y, z), sad(y, zs), 1e-6);
}

TEST(Re, HandValues) {
  const SpectralCube y = random_cube(5, 5, 4, 9);
  EXPECT_EQ(re(y, y), 0.0);
  SpectralCube shifted = y;
  for (float& v : shifted.values()) v += 0.1f;
  EXPECT_NEAR(re(y, shifted), 0.1, 1e-6);
  SpectralCube zero(4, 4, 2), checker(4, 4, 2);
  for (std::size_t i = 0; i < checker.values().size(); ++i) checker.values()[i] = (i % 2) ? 1.0f : 0.0f;
  EXPECT_NEAR(re(zero, checker), std::sqrt(0.5), 1e-12);
  EXPECT_THROW(re(zero, random_cube(4, 4, 3, 1)), DataError);
}

TEST(Reconstruct, LinearProductPerPixel) {
  const AbundanceMap a = random_map(3, 2, 3, 10);
  Eigen::MatrixXd M(5, 3);
  M.setRandom();
  const SpectralCube y = reconstruct_linear(a, M);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_LT((y.pixel_vector(i, j) - M * a.pixel_vector(i, j)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Evaluate, ReportFieldsAndSerialisation) {
  const AbundanceMap a = random_map(4, 4, 3, 11), b = random_map(4, 4, 3, 12);
  const EvalReport r = evaluate_abundance(a, b, {"x", "y", "z"});
  ASSERT_TRUE(r.aad && r.aid);
  EXPECT_DOUBLE_EQ(*r.aad, aad(a, b));
  EXPECT_DOUBLE_EQ(*r.aid, aid(a, b));
  ASSERT_EQ(r.per_endmember_rmse.size(), 3u);
  double s = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += std::pow(static_cast<double>(a.at(i, j, 1)) - b.at(i, j, 1), 2);
  EXPECT_NEAR(r.per_endmember_rmse[1], std::sqrt(s / 16), 1e-9);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j.at("aad").get<double>(), *r.aad);
  const std::string header = EvalReport::csv_header(), row = r.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Align, RecoversPermutationAgainstBruteForce) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd ref(12, 4), est(12, 4);
    for (Eigen::Index i = 0; i < ref.size(); ++i) ref.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < est.size(); ++i) est.data()[i] = u(rng);
    std::vector<int> p = {0, 1, 2, 3}, best_p;
    double best = 1e300;
    do {
      double cost = 0;
      for (int k = 0; k < 4; ++k) cost += vector_angle(ref.col(k), est.col(p[static_cast<std::size_t>(k)]));
      if (cost < best) {
        best = cost;
        best_p = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_EQ(align_endmembers(ref, est), best_p);
  }
}

TEST(Align, PermuteChannels) {
  const AbundanceMap a = random_map(2, 2, 3, 14);
  const AbundanceMap b = permute_channels(a, {2, 0, 1});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(b.at(i, j, 0), a.at(i, j, 2));
      EXPECT_EQ(b.at(i, j, 1), a.at(i, j, 0));
    }
}

}  // namespace
}  // namespace unmixlab
