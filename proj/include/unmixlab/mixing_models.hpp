#pragma once

#include "unmixlab/cube.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace unmixlab {

enum class MixingKind { LMM, GBM, PNMM, MLM };

std::string to_string(MixingKind kind);
// Accepts "LMM", "GBM", "BMM" (alias of GBM), "PNMM", "PPNM" (alias of PNMM), "MLM".
MixingKind parse_mixing_kind(const std::string& name);

// Where per-pixel nonlinearity parameters come from.
enum class ParameterSampling {
  Fixed,     // use gamma / p as given for every pixel
  PerPixel,  // gamma_ij ~ U[0,1], P ~ U[0, p_max], drawn from (seed, row, col)
};

// Forward model catalog:
//   LMM   y = M a
//   GBM   y = M a + sum_{i<j} gamma_ij a_i a_j (m_i .* m_j)
//   PNMM  y = x + b x.*x,            x = M a
//   MLM   y = (1-P) x ./ (1 - P x),  x = M a
struct MixingModelSpec {
  MixingKind kind = MixingKind::LMM;
  ParameterSampling sampling = ParameterSampling::Fixed;
  std::vector<double> gamma;  // GBM + Fixed: R(R-1)/2 entries, pairs (0,1),(0,2),..,(1,2),..
  std::optional<double> b;    // PNMM
  std::optional<double> p;    // MLM + Fixed
  double p_max = 0.5;         // MLM + PerPixel
  std::uint64_t seed = 0;

  // Throws ConfigError when parameters are missing, superfluous, or out of range.
  void validate(int endmembers) const;
};

// Per-pixel nonlinearity parameters actually used for one pixel.
struct PixelParameters {
  std::vector<double> gamma;
  double b = 0.0;
  double p = 0.0;
};

PixelParameters pixel_parameters(const MixingModelSpec& spec, int endmembers, int row, int col);

// Low-level forward model with explicit parameters. `a` must be on the simplex
// within 1e-6.
Eigen::VectorXd mix_pixel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::MatrixXd& M,
                          MixingKind kind, const PixelParameters& params);

// Forward model using the MixingModelSpec's fixed parameters (PerPixel specs use the
// parameters of pixel (0, 0)).
Eigen::VectorXd mix_pixel(const Eigen::Ref<const Eigen::VectorXd>& a, const EndmemberMatrix& M,
                          const MixingModelSpec& spec);

SpectralCube mix_cube(const AbundanceMap& A, const EndmemberMatrix& M, const MixingModelSpec& spec);

// Sentinel for "no noise".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Adds i.i.d. Gaussian noise with variance mean(y^2) / 10^(snr_db/10).
SpectralCube add_noise(const SpectralCube& cube, double snr_db, std::uint64_t seed);

}  // namespace unmixlab
