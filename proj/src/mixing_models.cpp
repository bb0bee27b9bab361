#include "unmixlab/mixing_models.hpp"

#include "unmixlab/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace unmixlab {
namespace {

constexpr double kSimplexTolerance = 1e-6;

void check_simplex(const Eigen::Ref<const Eigen::VectorXd>& a) {
  if ((a.array() < -kSimplexTolerance).any() || !a.allFinite() ||
      std::abs(a.sum() - 1.0) > kSimplexTolerance) {
    throw DataError("abundance vector is off the simplex");
  }
}

}  // namespace

std::string to_string(MixingKind kind) {
  switch (kind) {
    case MixingKind::LMM: return "LMM";
    case MixingKind::GBM: return "GBM";
    case MixingKind::PNMM: return "PNMM";
    case MixingKind::MLM: return "MLM";
  }
  return "?";
}

MixingKind parse_mixing_kind(const std::string& name) {
  if (name == "LMM") return MixingKind::LMM;
  if (name == "GBM" || name == "BMM") return MixingKind::GBM;
  if (name == "PNMM" || name == "PPNM") return MixingKind::PNMM;
  if (name == "MLM") return MixingKind::MLM;
  throw ConfigError("unknown mixing model: " + name);
}

void MixingModelSpec::validate(int endmembers) const {
  const bool per_pixel = sampling == ParameterSampling::PerPixel;
  const std::size_t pairs = static_cast<std::size_t>(endmembers) * (endmembers - 1) / 2;
  const std::string name = to_string(kind);

  if (kind == MixingKind::GBM && !per_pixel) {
    if (gamma.size() != pairs) {
      throw ConfigError("GBM needs " + std::to_string(pairs) + " gamma coefficients");
    }
    for (double g : gamma) {
      if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("GBM gamma outside [0,1]");
    }
  } else if (!gamma.empty()) {
    throw ConfigError(name + " does not take gamma coefficients");
  }

  if (kind == MixingKind::PNMM) {
    if (!b || !std::isfinite(*b)) throw ConfigError("PNMM needs a finite b");
  } else if (b) {
    throw ConfigError(name + " does not take b");
  }

  if (kind == MixingKind::MLM && !per_pixel) {
    if (!p || !(*p >= 0.0 && *p < 1.0)) throw ConfigError("MLM needs P in [0,1)");
  } else if (p) {
    throw ConfigError(name + " does not take a fixed P");
  }
  if (kind == MixingKind::MLM && per_pixel && !(p_max >= 0.0 && p_max < 1.0)) {
    throw ConfigError("MLM p_max must lie in [0,1)");
  }
  if (per_pixel && (kind == MixingKind::LMM || kind == MixingKind::PNMM)) {
    throw ConfigError(name + " has no per-pixel parameters to sample");
  }
}

PixelParameters pixel_parameters(const MixingModelSpec& spec, int endmembers, int row, int col) {
  PixelParameters params;
  params.b = spec.b.value_or(0.0);
  if (spec.sampling == ParameterSampling::Fixed) {
    params.gamma = spec.gamma;
    params.p = spec.p.value_or(0.0);
    return params;
  }
  // Draws depend only on (seed, row, col) so pixel order never matters.
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (spec.kind == MixingKind::GBM) {
    params.gamma.resize(static_cast<std::size_t>(endmembers) * (endmembers - 1) / 2);
    for (double& g : params.gamma) g = unit(rng);
  } else if (spec.kind == MixingKind::MLM) {
    params.p = spec.p_max * unit(rng);
  }
  return params;
}

Eigen::VectorXd mix_pixel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::MatrixXd& M,
                          MixingKind kind, const PixelParameters& params) {
  if (a.size() != M.cols()) throw DataError("abundance length differs from endmember count");
  check_simplex(a);
  const Eigen::VectorXd x = M * a;
  switch (kind) {
    case MixingKind::LMM:
      return x;
    case MixingKind::GBM: {
      const int R = static_cast<int>(M.cols());
      if (params.gamma.size() != static_cast<std::size_t>(R) * (R - 1) / 2) {
        throw ConfigError("GBM gamma count does not match endmember count");
      }
      Eigen::VectorXd y = x;
      std::size_t k = 0;
      for (int i = 0; i < R; ++i) {
        for (int j = i + 1; j < R; ++j, ++k) {
          const double w = params.gamma[k] * a(i) * a(j);
          if (w != 0.0) y += w * M.col(i).cwiseProduct(M.col(j));
        }
      }
      return y;
    }
    case MixingKind::PNMM:
      return x + params.b * x.cwiseProduct(x);
    case MixingKind::MLM: {
      if (!(params.p >= 0.0 && params.p < 1.0)) throw ConfigError("MLM requires P in [0,1)");
      const Eigen::ArrayXd denom = 1.0 - params.p * x.array();
      if ((denom <= 0.0).any()) throw NumericalError("MLM denominator 1 - P x is not positive");
      return ((1.0 - params.p) * x.array() / denom).matrix();
    }
  }
  throw ConfigError("unknown mixing model");
}

Eigen::VectorXd mix_pixel(const Eigen::Ref<const Eigen::VectorXd>& a, const EndmemberMatrix& M,
                          const MixingModelSpec& spec) {
  spec.validate(M.count());
  return mix_pixel(a, M.signatures, spec.kind, pixel_parameters(spec, M.count(), 0, 0));
}

SpectralCube mix_cube(const AbundanceMap& A, const EndmemberMatrix& M, const MixingModelSpec& spec) {
  if (A.endmembers() != M.count()) {
    throw DataError("abundance map has " + std::to_string(A.endmembers()) + " channels but M has " +
                    std::to_string(M.count()) + " endmembers");
  }
  spec.validate(M.count());
  SpectralCube cube(A.height(), A.width(), M.bands());
  for (int r = 0; r < A.height(); ++r) {
    for (int c = 0; c < A.width(); ++c) {
      const auto params = pixel_parameters(spec, M.count(), r, c);
      cube.set_pixel(r, c, mix_pixel(A.pixel_vector(r, c), M.signatures, spec.kind, params));
    }
  }
  std::ostringstream prov;
  prov << "model=" << to_string(spec.kind)
       << ";sampling=" << (spec.sampling == ParameterSampling::PerPixel ? "per_pixel" : "fixed")
       << ";seed=" << spec.seed;
  cube.provenance = prov.str();
  return cube;
}

SpectralCube add_noise(const SpectralCube& cube, double snr_db, std::uint64_t seed) {
  for (float v : cube.values()) {
    if (!std::isfinite(v)) throw DataError("add_noise: cube contains non-finite values");
  }
  SpectralCube out = cube;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  if (!std::isfinite(snr_db)) throw ConfigError("add_noise: SNR must be finite or +inf");

  double power = 0.0;
  for (float v : cube.values()) power += static_cast<double>(v) * v;
  power /= static_cast<double>(std::max<std::size_t>(1, cube.values().size()));
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (float& v : out.values()) v = static_cast<float>(v + noise(rng));
  out.snr_db = snr_db;
  std::ostringstream prov;
  prov << cube.provenance << (cube.provenance.empty() ? "" : ";") << "snr_db=" << snr_db
       << ";noise_seed=" << seed;
  out.provenance = prov.str();
  return out;
}

}  // namespace unmixlab
