#include "support/temp_dir.hpp"
#include "unmixlab/error.hpp"
#include "unmixlab/hashing.hpp"
#include "unmixlab/trainer.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

namespace unmixlab {
namespace {

Eigen::MatrixXd endmembers() {
  Eigen::MatrixXd M(5, 3);
  M << 0.1, 0.5, 0.9, 0.2, 0.6, 0.7, 0.3, 0.8, 0.4, 0.9, 0.2, 0.3, 0.5, 0.5, 0.1;
  return M;
}

SpectralCube linear_cube(int h, int w, unsigned seed) {
  const Eigen::MatrixXd M = endmembers();
  SpectralCube c(h, w, 5);
  std::mt19937 rng(seed);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      Eigen::Vector3d a(e(rng), e(rng), e(rng));
      c.set_pixel(i, j, M * (a / a.sum()));
    }
  return c;
}

TrainingConfig tiny_config() {
  TrainingConfig c;
  c.epochs = 2;
  c.batch_size = 2;
  c.seed = 5;
  c.train_overlap = 0.5;
  c.inference_overlap = 0.5;
  c.prior_block = 4;
  c.prior_smoothing = 1;
  c.architecture.patch = 8;
  c.architecture.generator_channels = {4, 6, 8};
  c.architecture.discriminator_channels = {4, 4, 4};
  c.architecture.autoencoder_channels = {4, 6};
  c.architecture.mine_hidden = 8;
  c.architecture.mine_block = 4;
  c.pretrain_epochs = 8;
  c.pretrain_threshold = 0.5;
  return c;
}

TEST(Trainer, ZeroEpochsReturnsInitialisedState) {
  TrainingConfig c = tiny_config();
  c.epochs = 0;
  const TrainingResult r = train(linear_cube(16, 16, 1), endmembers(), c);
  EXPECT_FALSE(r.state.trained);
  EXPECT_TRUE(r.log.steps.empty());
  EXPECT_TRUE(r.log.epochs.empty());
  EXPECT_EQ(r.state.model.architecture().bands, 5);
  EXPECT_EQ(r.state.model.architecture().endmembers, 3);
  EXPECT_EQ(r.state.config_hash.size(), 16u);
  EXPECT_THROW(unmix_cube(linear_cube(16, 16, 1), endmembers(), r.state), ConfigError);
}

TEST(Trainer, SameSeedIsBitwiseReproducible) {
  const SpectralCube cube = linear_cube(16, 16, 2);
  const TrainingResult a = train(cube, endmembers(), tiny_config());
  const TrainingResult b = train(cube, endmembers(), tiny_config());
  ASSERT_FALSE(a.log.steps.empty());
  ASSERT_EQ(a.log.steps.size(), b.log.steps.size());
  EXPECT_EQ(a.log.steps.front().value, b.log.steps.front().value);
  for (std::size_t i = 0; i < a.log.steps.size(); ++i) {
    EXPECT_EQ(a.log.steps[i].value, b.log.steps[i].value) << "step " << i + 1;
    EXPECT_EQ(a.log.steps[i].d_a, b.log.steps[i].d_a);
    EXPECT_EQ(a.log.steps[i].mine, b.log.steps[i].mine);
  }
  EXPECT_EQ(unmix_cube(cube, endmembers(), a.state).values(), unmix_cube(cube, endmembers(), b.state).values());

  TrainingConfig other = tiny_config();
  other.seed = 6;
  EXPECT_NE(train(cube, endmembers(), other).log.steps.front().value, a.log.steps.front().value);
}

TEST(Trainer, StepAndEpochBookkeeping) {
  const TrainingResult r = train(linear_cube(16, 16, 3), endmembers(), tiny_config());
  // 16x16 with 8x8 patches at stride 4: 3x3 = 9 patches, batches of 2.
  EXPECT_EQ(r.log.steps.size(), 2u * 5u);
  ASSERT_EQ(r.log.epochs.size(), 2u);
  EXPECT_EQ(r.state.steps, 10);
  EXPECT_TRUE(r.state.trained);
  double cyc = 0;
  for (int s = 0; s < 5; ++s) cyc += r.log.steps[static_cast<std::size_t>(s)].value[lcgu::kCycleY];
  EXPECT_NEAR(r.log.epochs[0].mean[lcgu::kCycleY], cyc / 5, 1e-12);
}

TEST(Trainer, AlternatingUpdatesTouchOnlyTheirOwnParameters) {
  TrainingConfig c = tiny_config();
  c.verify_alternation = true;
  const TrainingResult r = train(linear_cube(16, 16, 4), endmembers(), c);
  // d_a, d_y, mine, generator per step.
  EXPECT_EQ(r.log.verified_substeps, 4L * static_cast<long>(r.log.steps.size()));
}

TEST(Trainer, SemanticOffNeverRunsAutoencoderOrMine) {
  TrainingConfig c = tiny_config();
  c.ablation.semantic = false;
  const TrainingResult r = train(linear_cube(16, 16, 5), endmembers(), c);
  EXPECT_EQ(r.state.model.ae_p.forward_calls(), 0);
  EXPECT_EQ(r.state.model.mine.forward_calls(), 0);
  EXPECT_TRUE(r.log.pretrain_epoch_loss.empty());
  for (const StepRecord& s : r.log.steps) {
    EXPECT_EQ(s.value[lcgu::kAeRe], 0.0);
    EXPECT_EQ(s.value[lcgu::kAeMi], 0.0);
  }
}

TEST(Trainer, UnidirectionalSkipsImageDiscriminator) {
  TrainingConfig c = tiny_config();
  c.ablation.bidirectional = false;
  c.verify_alternation = true;
  const TrainingResult r = train(linear_cube(16, 16, 6), endmembers(), c);
  EXPECT_EQ(r.log.verified_substeps, 3L * static_cast<long>(r.log.steps.size()));
  for (const StepRecord& s : r.log.steps) EXPECT_EQ(s.d_y, 0.0);
}

TEST(Trainer, InputValidation) {
  SpectralCube raw = linear_cube(16, 16, 7);
  raw.values()[0] = 1.5f;
  EXPECT_THROW(train(raw, endmembers(), tiny_config()), DataError);
  EXPECT_THROW(train(linear_cube(16, 16, 7), Eigen::MatrixXd::Ones(4, 3), tiny_config()), DataError);
  TrainingConfig c = tiny_config();
  c.pretrain = false;
  EXPECT_THROW(train(linear_cube(16, 16, 7), endmembers(), c), ConfigError);
  c = tiny_config();
  c.epochs = -1;
  EXPECT_THROW(train(linear_cube(16, 16, 7), endmembers(), c), ConfigError);
}

TEST(Pretrain, EpochLossMonotoneWithinJitterAndFrozenAfterwards) {
  const SpectralCube cube = linear_cube(24, 24, 8);
  TrainingConfig c = tiny_config();
  c.architecture.bands = 5;
  c.architecture.endmembers = 3;
  lcgu::LcguModel model(c.architecture, endmembers(), 1);
  const PretrainReport rep = pretrain_ae(model, cube, c);
  ASSERT_EQ(rep.epoch_loss.size(), 8u);
  for (std::size_t i = 1; i < rep.epoch_loss.size(); ++i) EXPECT_LE(rep.epoch_loss[i], 1.05 * rep.epoch_loss[i - 1]) << i;
  EXPECT_LT(rep.holdout_loss, c.pretrain_threshold);
  EXPECT_TRUE(model.ae_trained);
  const std::vector<nn::Tensor> patches = cube_patches(cube, 8, 0.5);
  const nn::Tensor out = model.ae_p.forward(patches.front());
  EXPECT_EQ(model.ae_p.forward(patches.front()).data, out.data);
  for (double v : out.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Pretrain, ThresholdViolationIsReported) {
  TrainingConfig c = tiny_config();
  c.architecture.bands = 5;
  c.architecture.endmembers = 3;
  c.pretrain_epochs = 1;
  c.pretrain_threshold = 1e-9;
  lcgu::LcguModel model(c.architecture, endmembers(), 1);
  EXPECT_THROW(pretrain_ae(model, linear_cube(16, 16, 9), c), NumericalError);
  EXPECT_FALSE(model.ae_trained);
}

TEST(Prior, BatchesAreSimplexValuedAndStepDeterministic) {
  const TrainingConfig c = tiny_config();
  const nn::Tensor a = sample_prior_batch(c, 3, 8, 4, 7);
  EXPECT_EQ(a.n, 4);
  EXPECT_EQ(a.c, 3);
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) {
          EXPECT_GE(a.at(b, k, i, j), 0.0);
          s += a.at(b, k, i, j);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
  EXPECT_EQ(sample_prior_batch(c, 3, 8, 4, 7).data, a.data);
  EXPECT_NE(sample_prior_batch(c, 3, 8, 4, 8).data, a.data);
  TrainingConfig bad = c;
  bad.dirichlet_alpha = {1, 1};
  EXPECT_THROW(sample_prior_batch(bad, 3, 8, 1, 1), ConfigError);
}

lcgu::LcguModel inference_model() {
  lcgu::Architecture arch = tiny_config().architecture;
  arch.bands = 5;
  arch.endmembers = 3;
  return lcgu::LcguModel(arch, endmembers(), 3);
}

nn::Tensor patch_at(const SpectralCube& cube, int row, int col, int p) {
  nn::Tensor t(1, cube.bands(), p, p);
  for (int l = 0; l < cube.bands(); ++l)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) t.at(0, l, i, j) = cube.at(row + i, col + j, l);
  return t;
}

TEST(UnmixCube, SinglePatchCubeEqualsPatchOutput) {
  const lcgu::LcguModel model = inference_model();
  const SpectralCube cube = linear_cube(8, 8, 10);
  const AbundanceMap a = unmix_cube(cube, model, 0.5);
  const nn::Tensor ref = model.unmix_patch(patch_at(cube, 0, 0, 8));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.at(i, j, k), ref.at(0, k, i, j), 1e-7);
}

TEST(UnmixCube, OverlapPixelsAverageThenRenormalise) {
  const lcgu::LcguModel model = inference_model();
  const SpectralCube cube = linear_cube(8, 12, 11);
  // Overlap 0.5 on an 8-wide patch gives origins 0 and 4 along the columns.
  const AbundanceMap a = unmix_cube(cube, model, 0.5);
  const nn::Tensor left = model.unmix_patch(patch_at(cube, 0, 0, 8));
  const nn::Tensor right = model.unmix_patch(patch_at(cube, 0, 4, 8));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 12; ++j) {
      Eigen::Vector3d want = Eigen::Vector3d::Zero();
      int n = 0;
      if (j < 8) {
        for (int k = 0; k < 3; ++k) want(k) += left.at(0, k, i, j);
        ++n;
      }
      if (j >= 4) {
        for (int k = 0; k < 3; ++k) want(k) += right.at(0, k, i, j - 4);
        ++n;
      }
      want /= n;
      want /= want.sum();
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.at(i, j, k), want(k), 1e-7) << i << "," << j;
    }
  EXPECT_NO_THROW(a.validate(1e-6));
}

TEST(UnmixCube, ShapeChecks) {
  const lcgu::LcguModel model = inference_model();
  EXPECT_THROW(unmix_cube(SpectralCube(8, 8, 4), model), DataError);
  EXPECT_THROW(unmix_cube(SpectralCube(6, 8, 5), model), DataError);
  TrainingResult r = train(linear_cube(16, 16, 12), endmembers(), tiny_config());
  EXPECT_THROW(unmix_cube(linear_cube(16, 16, 12), Eigen::MatrixXd::Ones(5, 4), r.state), DataError);
}

TEST(TrainingConfigJson, RoundTripAndHashStability) {
  TrainingConfig c = tiny_config();
  c.dirichlet_alpha = {1.0, 2.0, 0.5};
  c.ablation.metric = lcgu::SemanticMetric::Rmse;
  c.ablation.gan_form = lcgu::GanForm::NonSaturating;
  c.loss_weights[lcgu::kAeMi] = 0.25;
  const nlohmann::json j = to_json(c);
  const TrainingConfig back = training_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(json_hash(to_json(back)), json_hash(j));
  c.seed += 1;
  EXPECT_NE(json_hash(to_json(c)), json_hash(j));
}

TEST(TrainingConfigJson, PartialDocumentsUseDefaultsAndUnknownKeysFail) {
  const TrainingConfig c = training_config_from_json(nlohmann::json::parse(R"({"epochs": 3, "adam": {"beta1": 0.6}})"));
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.adam.beta1, 0.6);
  EXPECT_EQ(c.adam.learning_rate, 2e-4);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_THROW(training_config_from_json(nlohmann::json::parse(R"({"epoch": 3})")), ConfigError);
  EXPECT_THROW(training_config_from_json(nlohmann::json::parse(R"({"ablation": {"semantic_metric": "l2"}})")),
               ConfigError);
  EXPECT_THROW(training_config_from_json(nlohmann::json::parse(R"({"adam": {"beta1": 1.0}})")), ConfigError);
}

TEST(TrainingLogCsv, HeaderRowsAndHooks) {
  testing::TempDir dir;
  TrainHooks hooks;
  hooks.log_path = dir / "log.csv";
  hooks.checkpoint_dir = dir / "ckpt";
  int epochs_seen = 0;
  hooks.on_epoch = [&](const EpochSummary& e) { EXPECT_EQ(e.epoch, ++epochs_seen); };
  const SpectralCube cube = linear_cube(16, 16, 13);
  const TrainingResult r = train(cube, endmembers(), tiny_config(), hooks);
  EXPECT_EQ(epochs_seen, 2);
  EXPECT_EQ(TrainingLog::csv_header(), "step,epoch,gan_a,gan_y,cycle_y,cycle_a,ae_re,ae_mi,total,d_a,d_y,mine");

  std::ifstream in(dir / "log.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config_hash=" + r.state.config_hash);
  std::getline(in, line);
  EXPECT_EQ(line, TrainingLog::csv_header());
  int rows = 0;
  while (std::getline(in, line)) {
    if (rows == 0) EXPECT_EQ(line, TrainingLog::csv_row(r.log.steps.front()));
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(r.log.steps.size()));

  ASSERT_TRUE(std::filesystem::exists(dir / "ckpt" / "epoch_001" / "manifest.json"));
  ASSERT_TRUE(std::filesystem::exists(dir / "ckpt" / "epoch_002" / "manifest.json"));
  const LcguState loaded = load_state(dir / "ckpt" / "epoch_002");
  EXPECT_EQ(loaded.config_hash, r.state.config_hash);
  EXPECT_TRUE(loaded.trained);
  EXPECT_EQ(loaded.steps, r.state.steps);
  EXPECT_EQ(unmix_cube(cube, endmembers(), loaded).values(), unmix_cube(cube, endmembers(), r.state).values());
}

}  // namespace
}  // namespace unmixlab
