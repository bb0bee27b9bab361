#pragma once

#include "unmixlab/cube.hpp"
#include "unmixlab/lcgu/losses.hpp"
#include "unmixlab/nn/adam.hpp"
#include "unmixlab/spectra_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace unmixlab {

struct TrainingConfig {
  int epochs = 25;
  nn::AdamSettings adam;  // 2e-4, 0.5, 0.999
  int batch_size = 16;
  lcgu::LossWeights loss_weights;
  lcgu::Ablation ablation;
  std::uint64_t seed = 0;
  std::vector<double> dirichlet_alpha;  // empty means all ones

  // Prior patches: one Dirichlet draw per prior_block x prior_block cell,
  // box-smoothed with prior_smoothing radius (0 = piecewise constant).
  int prior_block = 8;
  int prior_smoothing = 2;

  // Overlap of training patches; inference uses inference_overlap.
  double train_overlap = 1.0 / 3.0;
  double inference_overlap = 1.0 / 3.0;

  // Layer widths; bands and endmembers are filled in from the data.
  lcgu::Architecture architecture;

  // AE_p pretraining phase, run before the main loop.
  bool pretrain = true;
  int pretrain_epochs = 20;
  double pretrain_learning_rate = 1e-3;
  double pretrain_threshold = 0.1;  // max held-out L1 reconstruction

  // Hash parameter groups around every sub-step and fail if an update
  // touches parameters it does not own.
  bool verify_alternation = false;

  void validate() const;
};

nlohmann::json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

struct StepRecord {
  long step = 0;
  int epoch = 0;
  std::array<double, lcgu::kTermCount> value{};
  double total = 0.0;
  double d_a = 0.0;
  double d_y = 0.0;
  double mine = 0.0;
};

struct EpochSummary {
  int epoch = 0;
  std::array<double, lcgu::kTermCount> mean{};
  double total = 0.0;
  double cycle() const { return mean[lcgu::kCycleY] + mean[lcgu::kCycleA]; }
};

struct TrainingLog {
  std::string config_hash;
  std::vector<StepRecord> steps;
  std::vector<EpochSummary> epochs;
  std::vector<double> pretrain_epoch_loss;
  double pretrain_holdout_loss = 0.0;
  long verified_substeps = 0;

  static std::string csv_header();
  static std::string csv_row(const StepRecord& r);
  void write_csv(std::ostream& out) const;
};

struct LcguState {
  lcgu::LcguModel model;
  TrainingConfig config;
  std::string config_hash;
  long steps = 0;
  bool trained = false;
};

struct TrainingResult {
  LcguState state;
  TrainingLog log;
};

struct TrainHooks {
  std::optional<std::filesystem::path> checkpoint_dir;  // one sub-directory per epoch
  std::optional<std::filesystem::path> log_path;        // CSV, appended as steps finish
  std::function<void(const EpochSummary&)> on_epoch;
};

struct PretrainReport {
  std::vector<double> epoch_loss;  // mean training L1 per epoch
  double holdout_loss = 0.0;
};

// Patches of a [0,1] cube as (1, L, P, P) tensors.
std::vector<nn::Tensor> cube_patches(const SpectralCube& cube, int patch, double overlap,
                                     std::vector<PatchOrigin>* origins = nullptr);

// Trains AE_p on the cube's patches (every fifth patch held out), freezes it
// and marks the model ready for the semantic terms.
PretrainReport pretrain_ae(lcgu::LcguModel& model, const SpectralCube& cube, const TrainingConfig& config);

// Dirichlet prior batch of n patches for the given step.
nn::Tensor sample_prior_batch(const TrainingConfig& config, int endmembers, int patch, int n, long step);

// Full training run. The cube must already be in [0,1] and M in the same units.
TrainingResult train(const SpectralCube& cube, const Eigen::MatrixXd& M, const TrainingConfig& config,
                     const TrainHooks& hooks = {});

// Patchwise unmixing with averaged overlaps, renormalized per pixel.
AbundanceMap unmix_cube(const SpectralCube& cube, const lcgu::LcguModel& model, double overlap = 1.0 / 3.0);
AbundanceMap unmix_cube(const SpectralCube& cube, const Eigen::MatrixXd& M, const LcguState& state);

void save_state(const std::filesystem::path& dir, LcguState& state);
LcguState load_state(const std::filesystem::path& dir);

}  // namespace unmixlab
