#pragma once

#include "unmixlab/cube.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unmixlab {

inline constexpr double kAidFloor = 1e-9;

// Angle between two vectors with the cosine clamped to [-1, 1].
double vector_angle(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

// Symmetrized KL divergence after flooring entries at kAidFloor.
double symmetric_kl(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q);

// Abundance angle distance, mean over pixels, radians.
double aad(const AbundanceMap& a, const AbundanceMap& a_hat);
// Abundance information divergence, mean over pixels, nats.
double aid(const AbundanceMap& a, const AbundanceMap& a_hat);
// Spectral angle distance, mean over pixels, radians.
double sad(const SpectralCube& y, const SpectralCube& y_hat);
// Root-mean-square error over all pixels and bands.
double re(const SpectralCube& y, const SpectralCube& y_hat);

// Linear reconstruction M a per pixel.
SpectralCube reconstruct_linear(const AbundanceMap& a, const Eigen::MatrixXd& M);

struct EvalReport {
  std::optional<double> aad;
  std::optional<double> aid;
  std::optional<double> re;
  std::optional<double> sad;
  std::vector<std::string> endmember_names;
  std::vector<double> per_endmember_rmse;  // abundance RMSE per channel

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Abundance-side metrics (aad, aid, per-endmember RMSE).
EvalReport evaluate_abundance(const AbundanceMap& truth, const AbundanceMap& estimate,
                              const std::vector<std::string>& names = {});

// Reorders estimated endmember columns to best match reference columns by
// spectral angle (Hungarian assignment). Returns perm with
// estimated column perm[k] matched to reference column k.
std::vector<int> align_endmembers(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimated);

AbundanceMap permute_channels(const AbundanceMap& a, const std::vector<int>& perm);

}  // namespace unmixlab
