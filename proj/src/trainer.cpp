#include "unmixlab/trainer.hpp"

#include "unmixlab/error.hpp"
#include "unmixlab/hashing.hpp"
#include "unmixlab/scene_synth.hpp"
#include "unmixlab/spectra_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace unmixlab {
namespace {

using json = nlohmann::json;
using lcgu::Batch;
using lcgu::LcguModel;
using nn::Tensor;

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Stream tags for derived_rng.
constexpr std::uint64_t kTagEpochOrder = 1;
constexpr std::uint64_t kTagPrior = 2;
constexpr std::uint64_t kTagPretrain = 3;
constexpr std::uint64_t kTagMineShift = 4;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Tensor stack(const std::vector<Tensor>& items, const std::vector<std::size_t>& idx) {
  const Tensor& first = items[idx.front()];
  Tensor out(static_cast<int>(idx.size()), first.c, first.h, first.w);
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::copy_n(items[idx[k]].sample(0), first.sample_size(), out.sample(static_cast<int>(k)));
  return out;
}

// Box mean over in-bounds neighbours along one axis of every channel plane.
void box_axis(Tensor& t, int b, int radius, bool horizontal) {
  const int H = t.h, W = t.w;
  std::vector<double> line;
  for (int ch = 0; ch < t.c; ++ch) {
    const int outer = horizontal ? H : W, inner = horizontal ? W : H;
    for (int o = 0; o < outer; ++o) {
      line.assign(static_cast<std::size_t>(inner), 0.0);
      for (int i = 0; i < inner; ++i) line[static_cast<std::size_t>(i)] = horizontal ? t.at(b, ch, o, i) : t.at(b, ch, i, o);
      for (int i = 0; i < inner; ++i) {
        const int lo = std::max(0, i - radius), hi = std::min(inner - 1, i + radius);
        double s = 0.0;
        for (int k = lo; k <= hi; ++k) s += line[static_cast<std::size_t>(k)];
        (horizontal ? t.at(b, ch, o, i) : t.at(b, ch, i, o)) = s / (hi - lo + 1);
      }
    }
  }
}

class AlternationGuard {
 public:
  AlternationGuard(LcguModel& model, bool enabled, long& counter) : model_(model), enabled_(enabled), counter_(counter) {}

  // Runs `update` and checks that only `owner` changed.
  template <class F>
  void run(const char* owner, F&& update) {
    if (!enabled_) {
      update();
      return;
    }
    const auto before = hashes();
    update();
    const auto after = hashes();
    for (std::size_t g = 0; g < names_.size(); ++g)
      if (names_[g] != std::string(owner) && before[g] != after[g])
        throw Error(std::string("alternation violated: the ") + owner + " update modified " + names_[g] + " parameters");
    ++counter_;
  }

 private:
  std::vector<std::uint64_t> hashes() {
    return {nn::hash_parameters(model_.generator_parameters()), nn::hash_parameters(model_.d_a_parameters()),
            nn::hash_parameters(model_.d_y_parameters()), nn::hash_parameters(model_.mine_parameters()),
            nn::hash_parameters(model_.ae_parameters())};
  }

  LcguModel& model_;
  bool enabled_;
  long& counter_;
  const std::vector<std::string> names_{"generator", "d_a", "d_y", "mine", "ae_p"};
};

}  // namespace

// ------------------------------------------------------------------ config

void TrainingConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("beta1 must lie in [0,1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("beta2 must lie in [0,1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  for (double w : loss_weights.w)
    if (!std::isfinite(w)) throw ConfigError("loss weights must be finite");
  for (double a : dirichlet_alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("dirichlet_alpha entries must be positive");
  if (prior_block < 1) throw ConfigError("prior_block must be >= 1");
  if (prior_smoothing < 0) throw ConfigError("prior_smoothing must be >= 0");
  if (!(train_overlap >= 0.0 && train_overlap < 1.0)) throw ConfigError("train_overlap must lie in [0,1)");
  if (!(inference_overlap >= 0.0 && inference_overlap < 1.0)) throw ConfigError("inference_overlap must lie in [0,1)");
  if (pretrain_epochs < 0) throw ConfigError("pretrain epochs must be >= 0");
  if (!(pretrain_learning_rate > 0.0)) throw ConfigError("pretrain learning rate must be positive");
  if (!(pretrain_threshold > 0.0)) throw ConfigError("pretrain threshold must be positive");
}

json to_json(const TrainingConfig& c) {
  const auto& w = c.loss_weights;
  const auto& a = c.architecture;
  return {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"adam",
       {{"learning_rate", c.adam.learning_rate},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"epsilon", c.adam.epsilon}}},
      {"loss_weights",
       {{"gan_a", w[lcgu::kGanA]},
        {"gan_y", w[lcgu::kGanY]},
        {"cycle_y", w[lcgu::kCycleY]},
        {"cycle_a", w[lcgu::kCycleA]},
        {"ae_re", w[lcgu::kAeRe]},
        {"ae_mi", w[lcgu::kAeMi]}}},
      {"ablation",
       {{"bidirectional", c.ablation.bidirectional},
        {"semantic", c.ablation.semantic},
        {"semantic_metric", c.ablation.metric == lcgu::SemanticMetric::MutualInformation ? "mi" : "rmse"},
        {"negate_mi", c.ablation.negate_mi},
        {"gan_form", c.ablation.gan_form == lcgu::GanForm::Saturating ? "saturating" : "non_saturating"}}},
      {"dirichlet_alpha", c.dirichlet_alpha},
      {"prior_block", c.prior_block},
      {"prior_smoothing", c.prior_smoothing},
      {"train_overlap", c.train_overlap},
      {"inference_overlap", c.inference_overlap},
      {"architecture",
       {{"patch", a.patch},
        {"generator_channels", a.generator_channels},
        {"discriminator_channels", a.discriminator_channels},
        {"autoencoder_channels", a.autoencoder_channels},
        {"mine_hidden", a.mine_hidden},
        {"mine_block", a.mine_block}}},
      {"pretrain",
       {{"enabled", c.pretrain},
        {"epochs", c.pretrain_epochs},
        {"learning_rate", c.pretrain_learning_rate},
        {"threshold", c.pretrain_threshold}}},
      {"verify_alternation", c.verify_alternation},
  };
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  try {
    reject_unknown(j,
                   {"epochs", "batch_size", "seed", "adam", "loss_weights", "ablation", "dirichlet_alpha", "prior_block",
                    "prior_smoothing", "train_overlap", "inference_overlap", "architecture", "pretrain",
                    "verify_alternation"},
                   "training config");
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "seed", c.seed);
    read_opt(j, "dirichlet_alpha", c.dirichlet_alpha);
    read_opt(j, "prior_block", c.prior_block);
    read_opt(j, "prior_smoothing", c.prior_smoothing);
    read_opt(j, "train_overlap", c.train_overlap);
    read_opt(j, "inference_overlap", c.inference_overlap);
    read_opt(j, "verify_alternation", c.verify_alternation);
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      reject_unknown(a, {"learning_rate", "beta1", "beta2", "epsilon"}, "adam");
      read_opt(a, "learning_rate", c.adam.learning_rate);
      read_opt(a, "beta1", c.adam.beta1);
      read_opt(a, "beta2", c.adam.beta2);
      read_opt(a, "epsilon", c.adam.epsilon);
    }
    if (j.contains("loss_weights")) {
      const json& w = j.at("loss_weights");
      reject_unknown(w, {"gan_a", "gan_y", "cycle_y", "cycle_a", "ae_re", "ae_mi"}, "loss_weights");
      for (int t = 0; t < lcgu::kTermCount; ++t) read_opt(w, lcgu::term_name(t), c.loss_weights[t]);
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      reject_unknown(a, {"bidirectional", "semantic", "semantic_metric", "negate_mi", "gan_form"}, "ablation");
      read_opt(a, "bidirectional", c.ablation.bidirectional);
      read_opt(a, "semantic", c.ablation.semantic);
      read_opt(a, "negate_mi", c.ablation.negate_mi);
      if (a.contains("semantic_metric")) {
        const std::string m = a.at("semantic_metric").get<std::string>();
        if (m == "mi") c.ablation.metric = lcgu::SemanticMetric::MutualInformation;
        else if (m == "rmse") c.ablation.metric = lcgu::SemanticMetric::Rmse;
        else throw ConfigError("semantic_metric must be 'mi' or 'rmse'");
      }
      if (a.contains("gan_form")) {
        const std::string g = a.at("gan_form").get<std::string>();
        if (g == "saturating") c.ablation.gan_form = lcgu::GanForm::Saturating;
        else if (g == "non_saturating") c.ablation.gan_form = lcgu::GanForm::NonSaturating;
        else throw ConfigError("gan_form must be 'saturating' or 'non_saturating'");
      }
    }
    if (j.contains("architecture")) {
      const json& a = j.at("architecture");
      reject_unknown(a,
                     {"patch", "generator_channels", "discriminator_channels", "autoencoder_channels", "mine_hidden",
                      "mine_block"},
                     "architecture");
      read_opt(a, "patch", c.architecture.patch);
      read_opt(a, "generator_channels", c.architecture.generator_channels);
      read_opt(a, "discriminator_channels", c.architecture.discriminator_channels);
      read_opt(a, "autoencoder_channels", c.architecture.autoencoder_channels);
      read_opt(a, "mine_hidden", c.architecture.mine_hidden);
      read_opt(a, "mine_block", c.architecture.mine_block);
    }
    if (j.contains("pretrain")) {
      const json& p = j.at("pretrain");
      reject_unknown(p, {"enabled", "epochs", "learning_rate", "threshold"}, "pretrain");
      read_opt(p, "enabled", c.pretrain);
      read_opt(p, "epochs", c.pretrain_epochs);
      read_opt(p, "learning_rate", c.pretrain_learning_rate);
      read_opt(p, "threshold", c.pretrain_threshold);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

// --------------------------------------------------------------------- log

std::string TrainingLog::csv_header() {
  std::string h = "step,epoch";
  for (int t = 0; t < lcgu::kTermCount; ++t) h += std::string(",") + lcgu::term_name(t);
  return h + ",total,d_a,d_y,mine";
}

std::string TrainingLog::csv_row(const StepRecord& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.step << ',' << r.epoch;
  for (double v : r.value) out << ',' << v;
  out << ',' << r.total << ',' << r.d_a << ',' << r.d_y << ',' << r.mine;
  return out.str();
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "# config_hash=" << config_hash << '\n' << csv_header() << '\n';
  for (const StepRecord& r : steps) out << csv_row(r) << '\n';
}

// ----------------------------------------------------------------- patches

std::vector<Tensor> cube_patches(const SpectralCube& cube, int patch, double overlap, std::vector<PatchOrigin>* origins) {
  if (cube.height() < patch || cube.width() < patch)
    throw DataError("cube " + std::to_string(cube.height()) + "x" + std::to_string(cube.width()) +
                    " is smaller than the " + std::to_string(patch) + "-pixel patch");
  const PatchSet set = extract_patches(cube, patch, overlap);
  const int L = cube.bands();
  std::vector<Tensor> out;
  out.reserve(set.patches.size());
  for (const auto& p : set.patches) {
    Tensor t(1, L, patch, patch);
    for (int i = 0; i < patch; ++i)
      for (int j = 0; j < patch; ++j)
        for (int l = 0; l < L; ++l) t.at(0, l, i, j) = p[(static_cast<std::size_t>(i) * patch + j) * L + l];
    out.push_back(std::move(t));
  }
  if (origins) *origins = set.origins;
  return out;
}

Tensor sample_prior_batch(const TrainingConfig& config, int R, int patch, int n, long step) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(R);
  if (!config.dirichlet_alpha.empty()) {
    if (static_cast<int>(config.dirichlet_alpha.size()) != R)
      throw ConfigError("dirichlet_alpha has " + std::to_string(config.dirichlet_alpha.size()) + " entries, expected " +
                        std::to_string(R));
    alpha = Eigen::Map<const Eigen::VectorXd>(config.dirichlet_alpha.data(), R);
  }
  auto rng = derived_rng(config.seed, kTagPrior, static_cast<std::uint64_t>(step));
  const int cells = (patch + config.prior_block - 1) / config.prior_block;
  Tensor out(n, R, patch, patch);
  for (int b = 0; b < n; ++b) {
    const auto draws = sample_dirichlet(alpha, static_cast<std::size_t>(cells) * cells, rng());
    for (int i = 0; i < patch; ++i)
      for (int j = 0; j < patch; ++j) {
        const auto& d = draws[static_cast<std::size_t>(i / config.prior_block) * cells + j / config.prior_block];
        for (int k = 0; k < R; ++k) out.at(b, k, i, j) = d(k);
      }
    if (config.prior_smoothing > 0) {
      box_axis(out, b, config.prior_smoothing, true);
      box_axis(out, b, config.prior_smoothing, false);
      for (int i = 0; i < patch; ++i)
        for (int j = 0; j < patch; ++j) {
          double s = 0.0;
          for (int k = 0; k < R; ++k) s += out.at(b, k, i, j);
          for (int k = 0; k < R; ++k) out.at(b, k, i, j) /= s;
        }
    }
  }
  return out;
}

// --------------------------------------------------------------- pretrain

PretrainReport pretrain_ae(LcguModel& model, const SpectralCube& cube, const TrainingConfig& config) {
  const std::vector<Tensor> patches = cube_patches(cube, model.architecture().patch, config.train_overlap);
  std::vector<std::size_t> train_idx, hold_idx;
  for (std::size_t i = 0; i < patches.size(); ++i) (patches.size() >= 5 && i % 5 == 4 ? hold_idx : train_idx).push_back(i);
  if (hold_idx.empty()) hold_idx = train_idx;

  nn::AdamSettings settings = config.adam;
  settings.learning_rate = config.pretrain_learning_rate;
  nn::Adam adam(model.ae_parameters(), settings);

  PretrainReport report;
  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    auto rng = derived_rng(config.seed, kTagPretrain, static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order = train_idx;
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
      const Tensor x = stack(patches, idx);
      lcgu::Autoencoder::Trace tr;
      model.ae_p.forward(x, &tr);
      Tensor g;
      const double loss = nn::l1_mean(tr.out, x, &g);
      if (!std::isfinite(loss))
        throw NumericalError("AE_p pretraining diverged at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(start) + " (loss " + std::to_string(loss) + ", learning rate " +
                             std::to_string(settings.learning_rate) + ")");
      adam.zero_grad();
      model.ae_p.backward(tr, g);
      adam.step();
      sum += loss * static_cast<double>(idx.size());
      count += idx.size();
    }
    report.epoch_loss.push_back(sum / static_cast<double>(count));
  }

  double hold = 0.0;
  for (std::size_t i : hold_idx) hold += nn::l1_mean(model.ae_p.forward(patches[i]), patches[i]);
  report.holdout_loss = hold / static_cast<double>(hold_idx.size());
  if (!(report.holdout_loss <= config.pretrain_threshold))
    throw NumericalError("AE_p held-out L1 " + std::to_string(report.holdout_loss) + " is above the threshold " +
                         std::to_string(config.pretrain_threshold) + " after " + std::to_string(config.pretrain_epochs) +
                         " epochs");
  model.ae_trained = true;
  return report;
}

// ------------------------------------------------------------------- train

TrainingResult train(const SpectralCube& cube, const Eigen::MatrixXd& M, const TrainingConfig& input_config,
                     const TrainHooks& hooks) {
  TrainingConfig config = input_config;
  config.validate();
  if (cube.empty()) throw DataError("empty cube");
  if (M.rows() != cube.bands())
    throw DataError("endmember matrix has " + std::to_string(M.rows()) + " bands, cube has " +
                    std::to_string(cube.bands()));
  for (float v : cube.values())
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("training cube must be normalized to [0,1]");
  config.architecture.bands = cube.bands();
  config.architecture.endmembers = static_cast<int>(M.cols());

  TrainingResult result;
  LcguState& state = result.state;
  TrainingLog& log = result.log;
  state.config = config;
  state.config_hash = json_hash(to_json(config));
  log.config_hash = state.config_hash;
  state.model = LcguModel(config.architecture, M, config.seed);
  if (config.epochs == 0) return result;

  LcguModel& model = state.model;
  const lcgu::Ablation& ab = config.ablation;
  if (ab.semantic) {
    if (config.pretrain) {
      const PretrainReport pre = pretrain_ae(model, cube, config);
      log.pretrain_epoch_loss = pre.epoch_loss;
      log.pretrain_holdout_loss = pre.holdout_loss;
    } else if (!model.ae_trained) {
      throw ConfigError("semantic terms are enabled but AE_p pretraining is disabled");
    }
  }

  const int P = config.architecture.patch;
  const int R = config.architecture.endmembers;
  const std::vector<Tensor> patches = cube_patches(cube, P, config.train_overlap);

  nn::Adam opt_g(model.generator_parameters(), config.adam);
  nn::Adam opt_da(model.d_a_parameters(), config.adam);
  nn::Adam opt_dy(model.d_y_parameters(), config.adam);
  nn::Adam opt_mine(model.mine_parameters(), config.adam);
  AlternationGuard guard(model, config.verify_alternation, log.verified_substeps);

  std::ofstream csv;
  if (hooks.log_path) {
    csv.open(*hooks.log_path);
    if (!csv) throw DataError("cannot write training log " + hooks.log_path->string());
    csv << "# config_hash=" << state.config_hash << '\n' << TrainingLog::csv_header() << '\n';
  }

  const bool use_mine = ab.semantic && ab.metric == lcgu::SemanticMetric::MutualInformation;
  const int blocks_per_patch = (P / config.architecture.mine_block) * (P / config.architecture.mine_block);
  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0);
    auto order_rng = derived_rng(config.seed, kTagEpochOrder, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), order_rng);

    EpochSummary summary;
    summary.epoch = epoch;
    std::size_t in_epoch = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      ++step;
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
      Batch batch;
      batch.y = stack(patches, idx);
      batch.a_prior = sample_prior_batch(config, R, P, batch.y.n, step);
      {
        auto shift_rng = derived_rng(config.seed, kTagMineShift, static_cast<std::uint64_t>(step));
        const int rows = batch.y.n * blocks_per_patch;
        batch.mine_shift = rows > 1 ? std::uniform_int_distribution<int>(1, rows - 1)(shift_rng) : 1;
      }

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      try {
        const lcgu::GeneratorPass pass = lcgu::forward_generators(model, batch, ab);
        guard.run("d_a", [&] {
          opt_da.zero_grad();
          rec.d_a = lcgu::discriminator_a_step(model, batch, pass, ab.gan_form, true);
          opt_da.step();
        });
        if (ab.bidirectional)
          guard.run("d_y", [&] {
            opt_dy.zero_grad();
            rec.d_y = lcgu::discriminator_y_step(model, batch, pass, ab.gan_form, true);
            opt_dy.step();
          });
        if (use_mine)
          guard.run("mine", [&] {
            opt_mine.zero_grad();
            rec.mine = lcgu::mine_step(model, batch, pass, true);
            opt_mine.step();
          });
        guard.run("generator", [&] {
          opt_g.zero_grad();
          const lcgu::LossBreakdown b = lcgu::generator_objective(model, batch, pass, config.loss_weights, ab, true);
          rec.value = b.value;
          rec.total = b.total;
          opt_g.step();
        });
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step) + " (epoch " +
                             std::to_string(epoch) + ")");
      }

      for (int t = 0; t < lcgu::kTermCount; ++t) summary.mean[static_cast<std::size_t>(t)] += rec.value[static_cast<std::size_t>(t)];
      summary.total += rec.total;
      ++in_epoch;
      if (csv.is_open()) csv << TrainingLog::csv_row(rec) << '\n' << std::flush;
      log.steps.push_back(rec);
    }
    for (double& m : summary.mean) m /= static_cast<double>(in_epoch);
    summary.total /= static_cast<double>(in_epoch);
    log.epochs.push_back(summary);
    state.steps = step;
    state.trained = true;
    if (hooks.checkpoint_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d", epoch);
      save_state(*hooks.checkpoint_dir / name, state);
    }
    if (hooks.on_epoch) hooks.on_epoch(summary);
  }
  return result;
}

// ------------------------------------------------------------------- unmix

AbundanceMap unmix_cube(const SpectralCube& cube, const LcguModel& model, double overlap) {
  const lcgu::Architecture& arch = model.architecture();
  if (cube.bands() != arch.bands)
    throw DataError("cube has " + std::to_string(cube.bands()) + " bands, model expects " + std::to_string(arch.bands));
  const int P = arch.patch, R = arch.endmembers;
  std::vector<PatchOrigin> origins;
  const std::vector<Tensor> patches = cube_patches(cube, P, overlap, &origins);

  const int H = cube.height(), W = cube.width();
  std::vector<double> sum(static_cast<std::size_t>(H) * W * R, 0.0);
  std::vector<int> count(static_cast<std::size_t>(H) * W, 0);
  constexpr std::size_t kChunk = 16;
  for (std::size_t start = 0; start < patches.size(); start += kChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(patches.size(), start + kChunk); ++i) idx.push_back(i);
    const Tensor a = model.unmix_patch(stack(patches, idx));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const PatchOrigin o = origins[idx[k]];
      for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) {
          const std::size_t pix = static_cast<std::size_t>(o.row + i) * W + (o.col + j);
          ++count[pix];
          for (int r = 0; r < R; ++r) sum[pix * R + r] += a.at(static_cast<int>(k), r, i, j);
        }
    }
  }

  AbundanceMap out(H, W, R);
  for (int row = 0; row < H; ++row)
    for (int col = 0; col < W; ++col) {
      const std::size_t pix = static_cast<std::size_t>(row) * W + col;
      double total = 0.0;
      for (int r = 0; r < R; ++r) total += sum[pix * R + r] / count[pix];
      for (int r = 0; r < R; ++r) out.at(row, col, r) = static_cast<float>(sum[pix * R + r] / count[pix] / total);
    }
  out.provenance = "lcgu;patch=" + std::to_string(P);
  return out;
}

AbundanceMap unmix_cube(const SpectralCube& cube, const Eigen::MatrixXd& M, const LcguState& state) {
  if (!state.trained) throw ConfigError("LCGU state is untrained");
  const Eigen::MatrixXd& own = state.model.endmembers();
  if (M.rows() != own.rows() || M.cols() != own.cols())
    throw DataError("endmember matrix does not match the one used for training");
  return unmix_cube(cube, state.model, state.config.inference_overlap);
}

// -------------------------------------------------------------- persistence

void save_state(const std::filesystem::path& dir, LcguState& state) {
  const json meta = {{"training_config", to_json(state.config)}, {"steps", state.steps}, {"trained", state.trained}};
  lcgu::save_checkpoint(dir, state.model, state.config_hash, meta.dump());
}

LcguState load_state(const std::filesystem::path& dir) {
  lcgu::Checkpoint ck = lcgu::load_checkpoint(dir);
  LcguState state;
  const json meta = json::parse(ck.metadata_json);
  if (!meta.contains("training_config")) throw DataError("checkpoint in " + dir.string() + " has no training config");
  state.config = training_config_from_json(meta.at("training_config"));
  state.config.architecture = ck.model.architecture();
  state.steps = meta.value("steps", 0L);
  state.trained = meta.value("trained", false);
  state.config_hash = ck.config_hash;
  state.model = std::move(ck.model);
  return state;
}

}  // namespace unmixlab
