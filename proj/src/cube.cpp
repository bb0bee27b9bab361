#include "unmixlab/cube.hpp"

#include "unmixlab/error.hpp"

#include <cmath>
#include <sstream>

namespace unmixlab {

PixelGrid::PixelGrid(int height, int width, int depth)
    : height_(height), width_(width), depth_(depth) {
  if (height < 0 || width < 0 || depth < 0) {
    throw DataError("negative grid dimension");
  }
  values_.assign(static_cast<std::size_t>(height) * width * depth, 0.0f);
}

Eigen::VectorXd PixelGrid::pixel_vector(int row, int col) const {
  auto p = pixel(row, col);
  Eigen::VectorXd v(depth_);
  for (int k = 0; k < depth_; ++k) v(k) = p[k];
  return v;
}

void PixelGrid::set_pixel(int row, int col, const Eigen::Ref<const Eigen::VectorXd>& v) {
  auto p = pixel(row, col);
  for (int k = 0; k < depth_; ++k) p[k] = static_cast<float>(v(k));
}

void AbundanceMap::validate(double tolerance) const {
  for (int r = 0; r < height(); ++r) {
    for (int c = 0; c < width(); ++c) {
      double sum = 0.0;
      for (float a : pixel(r, c)) {
        if (!std::isfinite(a) || a < -tolerance) {
          std::ostringstream msg;
          msg << "abundance at (" << r << ", " << c << ") is negative or non-finite";
          throw DataError(msg.str());
        }
        sum += a;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        std::ostringstream msg;
        msg << "abundance at (" << r << ", " << c << ") sums to " << sum;
        throw DataError(msg.str());
      }
    }
  }
}

void EndmemberMatrix::validate() const {
  const int L = bands();
  const int R = count();
  if (R < 1 || L < 1) throw DataError("endmember matrix is empty");
  if (L < R) throw DataError("endmember matrix needs at least as many bands as endmembers");
  if (static_cast<int>(names.size()) != R) throw DataError("endmember name count differs from column count");
  if (!wavelengths.empty() && static_cast<int>(wavelengths.size()) != L) {
    throw DataError("wavelength count differs from band count");
  }
  for (int j = 0; j < R; ++j) {
    for (int i = 0; i < L; ++i) {
      const double v = signatures(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw DataError("endmember '" + names[j] + "' has reflectance outside [0,1]");
      }
    }
  }
  for (int j = 0; j < R; ++j) {
    for (int k = j + 1; k < R; ++k) {
      if (signatures.col(j) == signatures.col(k)) {
        throw DataError("endmembers '" + names[j] + "' and '" + names[k] + "' are identical");
      }
    }
  }
}

EndmemberMatrix resample_bands(const EndmemberMatrix& m, int bands) {
  const int L = m.bands();
  if (bands < 1 || L < 1) throw ConfigError("resample_bands: band counts must be positive");
  EndmemberMatrix out;
  out.names = m.names;
  out.signatures.resize(bands, m.count());
  if (!m.wavelengths.empty()) out.wavelengths.resize(bands);
  for (int i = 0; i < bands; ++i) {
    const double pos = bands == 1 ? 0.0 : static_cast<double>(i) * (L - 1) / (bands - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, L - 1);
    const double t = pos - lo;
    out.signatures.row(i) = (1.0 - t) * m.signatures.row(lo) + t * m.signatures.row(hi);
    if (!m.wavelengths.empty()) {
      out.wavelengths[i] = (1.0 - t) * m.wavelengths[lo] + t * m.wavelengths[hi];
    }
  }
  return out;
}

}  // namespace unmixlab
