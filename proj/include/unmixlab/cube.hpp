#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace unmixlab {

// Dense height x width x depth array of 32-bit floats stored row-major in
// (row, col, channel) order, i.e. the on-disk layout.
class PixelGrid {
 public:
  PixelGrid() = default;
  PixelGrid(int height, int width, int depth);

  int height() const { return height_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return values_.empty(); }

  float& at(int row, int col, int channel) { return values_[offset(row, col) + channel]; }
  float at(int row, int col, int channel) const { return values_[offset(row, col) + channel]; }

  std::span<float> pixel(int row, int col) {
    return {values_.data() + offset(row, col), static_cast<std::size_t>(depth_)};
  }
  std::span<const float> pixel(int row, int col) const {
    return {values_.data() + offset(row, col), static_cast<std::size_t>(depth_)};
  }

  // Double-precision copy of one pixel vector.
  Eigen::VectorXd pixel_vector(int row, int col) const;
  void set_pixel(int row, int col, const Eigen::Ref<const Eigen::VectorXd>& v);

  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  bool same_shape(const PixelGrid& other) const {
    return height_ == other.height_ && width_ == other.width_ && depth_ == other.depth_;
  }

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * depth_;
  }

  int height_ = 0;
  int width_ = 0;
  int depth_ = 0;
  std::vector<float> values_;
};

// Reflectance cube Y, H x W x L.
class SpectralCube : public PixelGrid {
 public:
  SpectralCube() = default;
  SpectralCube(int height, int width, int bands) : PixelGrid(height, width, bands) {}

  int bands() const { return depth(); }

  std::optional<double> snr_db;
  std::string provenance;
};

// Abundance map A, H x W x R. Every pixel lies on the probability simplex.
class AbundanceMap : public PixelGrid {
 public:
  AbundanceMap() = default;
  AbundanceMap(int height, int width, int endmembers) : PixelGrid(height, width, endmembers) {}

  int endmembers() const { return depth(); }

  // Throws DataError if any entry is negative (beyond -tolerance) or any
  // pixel sum deviates from one by more than `tolerance`.
  void validate(double tolerance = 1e-6) const;

  std::string provenance;
};

// Endmember signatures M, one column per material (L x R).
struct EndmemberMatrix {
  Eigen::MatrixXd signatures;
  std::vector<std::string> names;
  std::vector<double> wavelengths;  // empty when unknown

  int bands() const { return static_cast<int>(signatures.rows()); }
  int count() const { return static_cast<int>(signatures.cols()); }

  // Library-level invariants: finite entries in [0,1], L >= R, distinct
  // columns, names/wavelengths sized consistently. R >= 2 is checked by the
  // unmixing routines, not here, so single-signature selections stay legal.
  void validate() const;
};

// Linear interpolation of every signature onto `bands` evenly spaced
// positions spanning the original band range.
EndmemberMatrix resample_bands(const EndmemberMatrix& m, int bands);

}  // namespace unmixlab
