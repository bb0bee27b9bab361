#pragma once

#include "unmixlab/cube.hpp"
#include "unmixlab/mixing_models.hpp"
#include "unmixlab/scene_synth.hpp"
#include "unmixlab/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace unmixlab {

struct LibraryConfig {
  std::filesystem::path path;  // relative paths resolve against the config file's directory
  std::vector<std::string> endmembers{"Alunite", "Calcite", "Epidote", "Kaolinite", "Buddingtonite"};
  std::optional<int> bands;    // resample signatures to this many bands
};

struct ExperimentConfig {
  std::vector<MixingKind> models{MixingKind::LMM, MixingKind::GBM, MixingKind::PNMM, MixingKind::MLM};
  std::vector<double> snr_db{30.0, 15.0};  // +inf (JSON null) means noiseless
  std::vector<std::string> methods{"fcls", "ppnm", "mlm"};
  MixingKind train_model = MixingKind::LMM;  // LCGU is trained on this model only
  double pnmm_b = 0.3;
  double mlm_p_max = 0.5;
};

// One self-contained run configuration. Every section seed is derived from
// the top-level seed, which UNMIXLAB_SEED overrides.
struct RunConfig {
  std::uint64_t seed = 0;
  LibraryConfig library;
  SceneRecipe scene;  // endmember_names mirror library.endmembers
  MixingModelSpec mixing;
  double snr_db = kNoNoise;
  TrainingConfig training;
  ExperimentConfig experiment;

  nlohmann::json document;  // normalized document after overrides; hashed
  std::string hash;
};

// Seeds handed to the individual stages.
std::uint64_t scene_seed(const RunConfig& c);
std::uint64_t mixing_seed(const RunConfig& c);
std::uint64_t noise_seed(const RunConfig& c, MixingKind kind = MixingKind::LMM, double snr_db = 0.0);

// Parses a config document. `overrides` are "dotted.key=value" strings whose
// value is read as JSON when it parses and as a plain string otherwise.
RunConfig run_config_from_json(nlohmann::json doc, const std::vector<std::string>& overrides = {},
                               std::optional<std::uint64_t> seed_override = std::nullopt,
                               const std::filesystem::path& base_dir = {});

// Reads a config file (or the "config" member of a run manifest) and applies
// overrides plus UNMIXLAB_SEED from the environment.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json run_config_to_json(const RunConfig& c);

std::optional<std::uint64_t> seed_from_environment();

EndmemberMatrix load_configured_library(const RunConfig& c);

// Mixing spec used for one column of the cross-model matrix.
MixingModelSpec experiment_mixing_spec(const RunConfig& c, MixingKind kind);

// Training section as hashed into checkpoints, with data-dependent sizes filled in.
TrainingConfig resolved_training_config(const RunConfig& c, int bands, int endmembers);

}  // namespace unmixlab
