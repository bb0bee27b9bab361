#pragma once

#include "unmixlab/cube.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace unmixlab {

// Writes one abundance channel as an 8-bit grayscale PNG, mapping [0,1] to
// [0,255] with clamping. `config_hash` goes into a tEXt chunk when non-empty.
void write_abundance_png(const std::filesystem::path& path, const AbundanceMap& map, int channel,
                         const std::string& config_hash = {});

// One PNG per channel named <stem>_<channel name>.png; returns the paths.
std::vector<std::filesystem::path> write_abundance_pngs(const std::filesystem::path& dir, const std::string& stem,
                                                        const AbundanceMap& map, const std::vector<std::string>& names,
                                                        const std::string& config_hash = {});

// Decodes an 8-bit grayscale PNG written by write_abundance_png.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;
  std::string config_hash;
};
GrayImage read_gray_png(const std::filesystem::path& path);

}  // namespace unmixlab
