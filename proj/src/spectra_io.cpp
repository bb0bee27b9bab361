#include "unmixlab/spectra_io.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace unmixlab {
namespace {

static_assert(std::endian::native == std::endian::little, "cube I/O assumes a little-endian host");

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct LibraryTable {
  std::vector<std::string> names;
  std::vector<double> wavelengths;
  std::vector<std::vector<double>> columns;
};

LibraryTable read_library(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open endmember library: " + path.string());

  LibraryTable table;
  std::string line;
  while (std::getline(in, line) && (trim(line).empty() || trim(line)[0] == '#')) {
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError("endmember library header has no signature columns");
  table.names.assign(header.begin() + 1, header.end());
  table.columns.resize(table.names.size());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("endmember library line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    try {
      table.wavelengths.push_back(std::stod(fields[0]));
      for (std::size_t j = 1; j < fields.size(); ++j) {
        table.columns[j - 1].push_back(std::stod(fields[j]));
      }
    } catch (const std::logic_error&) {
      throw DataError("endmember library line " + std::to_string(line_no) + " is not numeric");
    }
  }
  if (table.wavelengths.empty()) throw DataError("endmember library has no bands");
  return table;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class Grid>
void save_grid(const std::filesystem::path& path, const Grid& grid, const char* magic,
               const std::string& provenance) {
  if (provenance.size() > 0xFFFF) throw DataError("provenance string longer than 65535 bytes");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(magic, 4);
  write_u32(out, static_cast<std::uint32_t>(grid.height()));
  write_u32(out, static_cast<std::uint32_t>(grid.width()));
  write_u32(out, static_cast<std::uint32_t>(grid.depth()));
  out.write(reinterpret_cast<const char*>(grid.values().data()),
            static_cast<std::streamsize>(grid.values().size() * sizeof(float)));
  const auto len = static_cast<std::uint16_t>(provenance.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(provenance.data(), static_cast<std::streamsize>(provenance.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

struct RawGrid {
  std::uint32_t height = 0, width = 0, depth = 0;
  std::vector<float> values;
  std::string provenance;
};

RawGrid load_grid(const std::filesystem::path& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader) throw DataError("corrupt file (truncated header): " + path.string());
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw DataError("corrupt file (bad magic, expected " + std::string(magic, 4) + "): " + path.string());
  }
  RawGrid g;
  std::memcpy(&g.height, bytes.data() + 4, 4);
  std::memcpy(&g.width, bytes.data() + 8, 4);
  std::memcpy(&g.depth, bytes.data() + 12, 4);

  const std::uint64_t count = std::uint64_t{g.height} * g.width * g.depth;
  const std::uint64_t payload = count * sizeof(float);
  if (bytes.size() < kHeader + payload + 2) {
    throw DataError("corrupt file (payload shorter than header shape " + std::to_string(g.height) + "x" +
                    std::to_string(g.width) + "x" + std::to_string(g.depth) + "): " + path.string());
  }
  std::uint16_t len = 0;
  std::memcpy(&len, bytes.data() + kHeader + payload, 2);
  if (bytes.size() != kHeader + payload + 2 + len) {
    throw DataError("corrupt file (byte length does not match header): " + path.string());
  }
  g.values.resize(count);
  std::memcpy(g.values.data(), bytes.data() + kHeader, payload);
  g.provenance.assign(bytes.data() + kHeader + payload + 2, len);
  return g;
}

std::optional<double> parse_snr(const std::string& provenance) {
  const auto pos = provenance.find("snr_db=");
  if (pos == std::string::npos) return std::nullopt;
  try {
    return std::stod(provenance.substr(pos + 7));
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<std::string> library_names(const std::filesystem::path& path) {
  return read_library(path).names;
}

EndmemberMatrix load_endmember_library(const std::filesystem::path& path,
                                       const std::vector<std::string>& selection) {
  if (selection.empty()) throw ConfigError("endmember selection is empty");
  std::set<std::string> seen;
  for (const auto& name : selection) {
    if (!seen.insert(name).second) throw ConfigError("duplicate endmember in selection: " + name);
  }

  const LibraryTable table = read_library(path);
  EndmemberMatrix m;
  m.wavelengths = table.wavelengths;
  m.signatures.resize(static_cast<Eigen::Index>(table.wavelengths.size()),
                      static_cast<Eigen::Index>(selection.size()));
  for (std::size_t j = 0; j < selection.size(); ++j) {
    const auto it = std::find(table.names.begin(), table.names.end(), selection[j]);
    if (it == table.names.end()) {
      throw DataError("endmember '" + selection[j] + "' not found in " + path.string());
    }
    const auto& col = table.columns[static_cast<std::size_t>(it - table.names.begin())];
    for (std::size_t i = 0; i < col.size(); ++i) m.signatures(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    m.names.push_back(selection[j]);
  }
  m.validate();
  return m;
}

NormalizedCube normalize_cube(const SpectralCube& cube) {
  NormalizedCube out;
  out.cube = cube;
  const auto& v = cube.values();
  if (v.empty()) return out;
  for (float x : v) {
    if (!std::isfinite(x)) throw DataError("normalize_cube: cube contains non-finite values");
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  out.offset = *lo;
  auto& dst = out.cube.values();
  if (*hi == *lo) {
    out.constant_input = true;
    out.scale = 1.0;
    std::fill(dst.begin(), dst.end(), 0.0f);
    return out;
  }
  out.scale = static_cast<double>(*hi) - static_cast<double>(*lo);
  for (std::size_t i = 0; i < v.size(); ++i) {
    dst[i] = static_cast<float>((static_cast<double>(v[i]) - out.offset) / out.scale);
  }
  return out;
}

Eigen::MatrixXd to_normalized_units(const Eigen::MatrixXd& signatures, double offset, double scale) {
  return (signatures.array() - offset) / scale;
}

int patch_stride(int size, double overlap_fraction) {
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) {
    throw ConfigError("patch overlap fraction must lie in [0, 1)");
  }
  return std::max(1, static_cast<int>(std::lround(size * (1.0 - overlap_fraction))));
}

std::vector<int> patch_axis_origins(int extent, int size, int stride) {
  if (extent < size) throw DataError("image extent smaller than patch size");
  std::vector<int> origins;
  int o = 0;
  for (;;) {
    origins.push_back(o);
    if (o + size >= extent) break;
    o += stride;
    if (o + size > extent) o = extent - size;
  }
  return origins;
}

PatchSet extract_patches(const PixelGrid& grid, int size, double overlap_fraction) {
  if (size < 1) throw ConfigError("patch size must be positive");
  if (grid.height() < size || grid.width() < size) {
    throw DataError("cube (" + std::to_string(grid.height()) + "x" + std::to_string(grid.width()) +
                    ") is smaller than the patch size " + std::to_string(size));
  }
  PatchSet set;
  set.size = size;
  set.channels = grid.depth();
  set.stride = patch_stride(size, overlap_fraction);
  const auto rows = patch_axis_origins(grid.height(), size, set.stride);
  const auto cols = patch_axis_origins(grid.width(), size, set.stride);
  const std::size_t row_len = static_cast<std::size_t>(size) * grid.depth();
  for (int r0 : rows) {
    for (int c0 : cols) {
      set.origins.push_back({r0, c0});
      std::vector<float> patch(row_len * size);
      for (int r = 0; r < size; ++r) {
        const auto src = grid.pixel(r0 + r, c0);
        std::copy_n(src.data(), row_len, patch.data() + r * row_len);
      }
      set.patches.push_back(std::move(patch));
    }
  }
  return set;
}

void save_cube(const std::filesystem::path& path, const SpectralCube& cube) {
  save_grid(path, cube, "HSC1", cube.provenance);
}

SpectralCube load_cube(const std::filesystem::path& path) {
  RawGrid g = load_grid(path, "HSC1");
  SpectralCube cube(static_cast<int>(g.height), static_cast<int>(g.width), static_cast<int>(g.depth));
  cube.values() = std::move(g.values);
  cube.provenance = std::move(g.provenance);
  cube.snr_db = parse_snr(cube.provenance);
  return cube;
}

void save_abundance(const std::filesystem::path& path, const AbundanceMap& map) {
  save_grid(path, map, "ABN1", map.provenance);
}

AbundanceMap load_abundance(const std::filesystem::path& path) {
  RawGrid g = load_grid(path, "ABN1");
  AbundanceMap map(static_cast<int>(g.height), static_cast<int>(g.width), static_cast<int>(g.depth));
  map.values() = std::move(g.values);
  map.provenance = std::move(g.provenance);
  return map;
}

}  // namespace unmixlab
