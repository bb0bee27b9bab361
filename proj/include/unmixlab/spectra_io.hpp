#pragma once

#include "unmixlab/cube.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace unmixlab {

// Reads a CSV endmember library (first column wavelength in nm, one named
// column per signature, one row per band) and returns the selected columns
// in selection order.
EndmemberMatrix load_endmember_library(const std::filesystem::path& path,
                                       const std::vector<std::string>& selection);

// Names available in a library file, in file order.
std::vector<std::string> library_names(const std::filesystem::path& path);

struct NormalizedCube {
  SpectralCube cube;
  double offset = 0.0;  // global minimum of the input
  double scale = 1.0;   // global max - min (1 for a constant cube)
  bool constant_input = false;
};

// Global min-max scaling to [0,1]. A constant cube maps to zeros and sets
// `constant_input`.
NormalizedCube normalize_cube(const SpectralCube& cube);

// Expresses endmember signatures in the units of a cube normalized with
// (offset, scale). The result may leave [0,1].
Eigen::MatrixXd to_normalized_units(const Eigen::MatrixXd& signatures, double offset, double scale);

struct PatchOrigin {
  int row = 0;
  int col = 0;
};

struct PatchSet {
  int size = 0;
  int channels = 0;
  int stride = 0;
  std::vector<PatchOrigin> origins;
  // One size*size*channels block per origin, (row, col, channel) order.
  std::vector<std::vector<float>> patches;
};

// Origins along one axis of length `extent`: multiples of `stride`, with the
// last patch clamped to the border so nothing is padded.
std::vector<int> patch_axis_origins(int extent, int size, int stride);

int patch_stride(int size, double overlap_fraction);

PatchSet extract_patches(const PixelGrid& grid, int size = 32, double overlap_fraction = 1.0 / 3.0);

void save_cube(const std::filesystem::path& path, const SpectralCube& cube);
SpectralCube load_cube(const std::filesystem::path& path);

void save_abundance(const std::filesystem::path& path, const AbundanceMap& map);
AbundanceMap load_abundance(const std::filesystem::path& path);

}  // namespace unmixlab
