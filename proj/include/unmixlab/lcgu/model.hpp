#pragma once

#include "unmixlab/lcgu/networks.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace unmixlab::lcgu {

// All LCGU sub-networks plus the endmember matrix they were built for.
// The mixing-unmixing branch calls the very same `unmix` / `mix` objects as the
// unmixing-mixing branch; there is exactly one copy of each generator.
class LcguModel {
 public:
  LcguModel() = default;
  LcguModel(const Architecture& arch, const Eigen::MatrixXd& endmembers, std::uint64_t seed);

  // y: (n, L, P, P) normalized patches -> (n, R, P, P), simplex per pixel.
  Tensor unmix_patch(const Tensor& y) const;
  // a: (n, R, P, P) -> (n, L, P, P) in [0,1]; input is [a, endmember plane].
  Tensor mix_patch(const Tensor& a) const;
  // [a, plane] with the plane broadcast over the batch.
  Tensor mix_input(const Tensor& a) const;

  std::vector<Parameter*> generator_parameters();
  std::vector<Parameter*> unmix_parameters() { return unmix.parameters(); }
  std::vector<Parameter*> mix_parameters() { return mix.parameters(); }
  std::vector<Parameter*> d_a_parameters() { return d_a.parameters(); }
  std::vector<Parameter*> d_y_parameters() { return d_y.parameters(); }
  std::vector<Parameter*> ae_parameters() { return ae_p.parameters(); }
  std::vector<Parameter*> mine_parameters() { return mine.parameters(); }
  std::vector<Parameter*> all_parameters();

  const Architecture& architecture() const { return arch_; }
  const Eigen::MatrixXd& endmembers() const { return endmembers_; }
  const Tensor& plane() const { return plane_; }

  Generator unmix;
  Generator mix;
  Discriminator d_a;
  Discriminator d_y;
  Autoencoder ae_p;
  MineNetwork mine;
  bool ae_trained = false;

 private:
  Architecture arch_;
  Eigen::MatrixXd endmembers_;
  Tensor plane_;
};

// Width of one MINE input row: two flattened block x block x L sub-patches.
int mine_input_width(const Architecture& arch);

// Checkpoint directory: one "<parameter name>.tns" file per parameter plus
// manifest.json with shapes, the architecture, extra metadata and config hash.
void save_checkpoint(const std::filesystem::path& dir, LcguModel& model, const std::string& config_hash,
                     const std::string& metadata_json = "{}");

struct Checkpoint {
  LcguModel model;
  std::string config_hash;
  std::string metadata_json;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Raw tensor file: "TNS1", u32 rows, u32 cols, rows*cols little-endian f64 (column-major).
void write_tensor_file(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_tensor_file(const std::filesystem::path& path);

}  // namespace unmixlab::lcgu
