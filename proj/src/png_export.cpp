#include "unmixlab/png_export.hpp"

#include "unmixlab/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace unmixlab {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

unsigned char to_byte(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

void write_abundance_png(const std::filesystem::path& path, const AbundanceMap& map, int channel,
                         const std::string& config_hash) {
  if (channel < 0 || channel >= map.endmembers()) throw DataError("PNG export: channel out of range");
  const int H = map.height(), W = map.width();
  std::vector<unsigned char> pixels(static_cast<std::size_t>(H) * W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) pixels[static_cast<std::size_t>(r) * W + c] = to_byte(map.at(r, c, channel));

  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::string key = "config_hash", value = config_hash;
  png_text text{};
  if (!config_hash.empty()) {
    text.compression = PNG_TEXT_COMPRESSION_NONE;
    text.key = key.data();
    text.text = value.data();
    png_set_text(png, info, &text, 1);
  }
  png_write_info(png, info);
  for (int r = 0; r < H; ++r) png_write_row(png, pixels.data() + static_cast<std::size_t>(r) * W);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::filesystem::path> write_abundance_pngs(const std::filesystem::path& dir, const std::string& stem,
                                                        const AbundanceMap& map, const std::vector<std::string>& names,
                                                        const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (int k = 0; k < map.endmembers(); ++k) {
    const std::string label = k < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(k)] : std::to_string(k);
    out.push_back(dir / (stem + "_" + label + ".png"));
    write_abundance_png(out.back(), map, k, config_hash);
  }
  return out;
}

GrayImage read_gray_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + " is not an 8-bit grayscale PNG");
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int r = 0; r < img.height; ++r) png_read_row(png, img.pixels.data() + static_cast<std::size_t>(r) * img.width, nullptr);
  png_read_end(png, info);
  png_textp text = nullptr;
  int count = 0;
  png_get_text(png, info, &text, &count);
  for (int i = 0; i < count; ++i)
    if (std::string(text[i].key) == "config_hash") img.config_hash = text[i].text;
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace unmixlab
