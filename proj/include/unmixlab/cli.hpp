#pragma once

#include "unmixlab/config.hpp"
#include "unmixlab/metrics.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace unmixlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

const char* version();

// Provenance record written next to every command's outputs as manifest.json.
struct RunManifest {
  std::string command;
  std::string config_hash;
  nlohmann::json config;  // full normalized config, enough to replay the run
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> arguments;
  double wall_clock_seconds = 0.0;
  std::string started_at;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& dir) const;
};

struct SynthOptions {
  std::filesystem::path out;
};
struct MixOptions {
  std::filesystem::path abundance;
  std::filesystem::path out;
};
struct TrainOptions {
  std::filesystem::path cube;
  std::filesystem::path out;
};
struct UnmixOptions {
  std::filesystem::path model;  // checkpoint directory written by train
  std::filesystem::path cube;
  std::filesystem::path out;
};
struct BaselineOptions {
  std::string method;
  std::filesystem::path cube;
  std::filesystem::path endmembers;  // library CSV
  std::vector<std::string> names;    // empty: every column of the library
  std::filesystem::path out;
};
struct EvalOptions {
  std::filesystem::path truth;
  std::filesystem::path estimate;
  std::filesystem::path cube;        // optional, enables re and sad
  std::filesystem::path endmembers;  // library CSV for the reconstruction
  std::vector<std::string> names;
  std::filesystem::path out;
};

RunManifest cmd_synth(const RunConfig& config, const SynthOptions& o);
RunManifest cmd_mix(const RunConfig& config, const MixOptions& o);
RunManifest cmd_train(const RunConfig& config, const TrainOptions& o);
RunManifest cmd_unmix(const RunConfig& config, const UnmixOptions& o);
RunManifest cmd_baseline(const BaselineOptions& o);
EvalReport cmd_eval_pair(const EvalOptions& o, RunManifest* manifest = nullptr);

// Cross-model matrix: one row per method, one column per (model, SNR).
struct MatrixResult {
  std::vector<std::string> methods;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> aad;  // [method][column], NaN where a method did not run
  std::vector<std::vector<double>> aid;
  RunManifest manifest;
};
std::string matrix_column(MixingKind kind, double snr_db);
MatrixResult cmd_eval_matrix(const RunConfig& config, const std::filesystem::path& out);

// Full command line (without the program name). Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unmixlab::cli
