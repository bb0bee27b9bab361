#include "unmixlab/lcgu/model.hpp"

#include "unmixlab/error.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>

namespace unmixlab::lcgu {
namespace {

using nlohmann::json;

std::mt19937_64 network_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x6c636775u};
  return std::mt19937_64(seq);
}

json architecture_json(const Architecture& a) {
  return {{"patch", a.patch},
          {"bands", a.bands},
          {"endmembers", a.endmembers},
          {"generator_channels", a.generator_channels},
          {"discriminator_channels", a.discriminator_channels},
          {"autoencoder_channels", a.autoencoder_channels},
          {"mine_hidden", a.mine_hidden},
          {"mine_block", a.mine_block}};
}

Architecture architecture_from_json(const json& j) {
  Architecture a;
  a.patch = j.at("patch").get<int>();
  a.bands = j.at("bands").get<int>();
  a.endmembers = j.at("endmembers").get<int>();
  a.generator_channels = j.at("generator_channels").get<std::array<int, 3>>();
  a.discriminator_channels = j.at("discriminator_channels").get<std::array<int, 3>>();
  a.autoencoder_channels = j.at("autoencoder_channels").get<std::array<int, 2>>();
  a.mine_hidden = j.at("mine_hidden").get<int>();
  a.mine_block = j.at("mine_block").get<int>();
  return a;
}

}  // namespace

int mine_input_width(const Architecture& arch) { return 2 * arch.bands * arch.mine_block * arch.mine_block; }

LcguModel::LcguModel(const Architecture& arch, const Eigen::MatrixXd& endmembers, std::uint64_t seed)
    : arch_(arch), endmembers_(endmembers) {
  arch_.validate();
  if (endmembers.rows() != arch.bands || endmembers.cols() != arch.endmembers)
    throw ConfigError("endmember matrix is " + std::to_string(endmembers.rows()) + "x" +
                      std::to_string(endmembers.cols()) + ", architecture expects " + std::to_string(arch.bands) +
                      "x" + std::to_string(arch.endmembers));
  const int L = arch.bands, R = arch.endmembers;
  unmix = Generator("unmix", L, R, arch.generator_channels, OutputHead::Softmax);
  mix = Generator("mix", L + R, L, arch.generator_channels, OutputHead::Sigmoid);
  d_a = Discriminator("d_a", R, arch.patch, arch.discriminator_channels);
  d_y = Discriminator("d_y", L, arch.patch, arch.discriminator_channels);
  ae_p = Autoencoder("ae_p", L, arch.autoencoder_channels);
  mine = MineNetwork("mine", mine_input_width(arch), arch.mine_hidden);
  plane_ = endmember_plane(endmembers_, arch.patch);

  std::uint64_t index = 0;
  auto init = [&](auto& net) {
    auto rng = network_rng(seed, index++);
    net.reset(rng);
  };
  init(unmix);
  init(mix);
  init(d_a);
  init(d_y);
  init(ae_p);
  init(mine);
}

Tensor LcguModel::mix_input(const Tensor& a) const {
  if (a.c != arch_.endmembers)
    throw DataError("mix_patch: abundance has " + std::to_string(a.c) + " channels, model expects " +
                    std::to_string(arch_.endmembers));
  if (a.h != arch_.patch || a.w != arch_.patch) throw DataError("mix_patch: patch size mismatch " + a.shape_string());
  return concat_channels(a, broadcast_batch(plane_, a.n));
}

Tensor LcguModel::unmix_patch(const Tensor& y) const {
  if (y.c != arch_.bands)
    throw DataError("unmix_patch: input has " + std::to_string(y.c) + " bands, model expects " +
                    std::to_string(arch_.bands));
  if (y.h != arch_.patch || y.w != arch_.patch) throw DataError("unmix_patch: patch size mismatch " + y.shape_string());
  return unmix.forward(y);
}

Tensor LcguModel::mix_patch(const Tensor& a) const { return mix.forward(mix_input(a)); }

std::vector<Parameter*> LcguModel::generator_parameters() {
  auto out = unmix.parameters();
  for (Parameter* p : mix.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> LcguModel::all_parameters() {
  std::vector<Parameter*> out;
  for (auto* group : {&unmix, &mix})
    for (Parameter* p : group->parameters()) out.push_back(p);
  for (auto* group : {&d_a, &d_y})
    for (Parameter* p : group->parameters()) out.push_back(p);
  for (Parameter* p : ae_p.parameters()) out.push_back(p);
  for (Parameter* p : mine.parameters()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------- tensors

void write_tensor_file(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows()), cols = static_cast<std::uint32_t>(m.cols());
  out.write("TNS1", 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw DataError("failed writing " + path.string());
}

Eigen::MatrixXd read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, "TNS1", 4) != 0) throw DataError("corrupt tensor file " + path.string());
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in || in.peek() != std::char_traits<char>::eof()) throw DataError("corrupt tensor file " + path.string());
  return m;
}

// ------------------------------------------------------------- checkpoint

void save_checkpoint(const std::filesystem::path& dir, LcguModel& model, const std::string& config_hash,
                     const std::string& metadata_json) {
  std::filesystem::create_directories(dir);
  json params = json::array();
  for (Parameter* p : model.all_parameters()) {
    const std::string file = p->name + ".tns";
    write_tensor_file(dir / file, p->value);
    params.push_back({{"name", p->name}, {"file", file}, {"shape", {p->value.rows(), p->value.cols()}}});
  }
  write_tensor_file(dir / "endmembers.tns", model.endmembers());
  json manifest = {{"format", "unmixlab-checkpoint-1"},
                   {"config_hash", config_hash},
                   {"architecture", architecture_json(model.architecture())},
                   {"ae_trained", model.ae_trained},
                   {"endmembers", "endmembers.tns"},
                   {"parameters", params},
                   {"metadata", json::parse(metadata_json)}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("failed writing checkpoint manifest in " + dir.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no checkpoint manifest in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint manifest: " + std::string(e.what()));
  }
  Checkpoint ckpt;
  try {
    const Architecture arch = architecture_from_json(manifest.at("architecture"));
    const Eigen::MatrixXd M = read_tensor_file(dir / manifest.at("endmembers").get<std::string>());
    ckpt.model = LcguModel(arch, M, 0);
    ckpt.model.ae_trained = manifest.at("ae_trained").get<bool>();
    ckpt.config_hash = manifest.at("config_hash").get<std::string>();
    ckpt.metadata_json = manifest.value("metadata", json::object()).dump();

    std::map<std::string, Parameter*> by_name;
    for (Parameter* p : ckpt.model.all_parameters()) by_name[p->name] = p;
    std::size_t loaded = 0;
    for (const json& entry : manifest.at("parameters")) {
      const std::string name = entry.at("name").get<std::string>();
      auto it = by_name.find(name);
      if (it == by_name.end()) throw DataError("checkpoint has unknown parameter " + name);
      Eigen::MatrixXd value = read_tensor_file(dir / entry.at("file").get<std::string>());
      if (value.rows() != it->second->value.rows() || value.cols() != it->second->value.cols())
        throw DataError("checkpoint parameter " + name + " has the wrong shape");
      it->second->value = std::move(value);
      ++loaded;
    }
    if (loaded != by_name.size()) throw DataError("checkpoint is missing parameters");
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint manifest: " + std::string(e.what()));
  }
  return ckpt;
}

}  // namespace unmixlab::lcgu
