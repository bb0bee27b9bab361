#pragma once

#include "unmixlab/lcgu/model.hpp"

#include <array>
#include <optional>
#include <string>

namespace unmixlab::lcgu {

enum class GanForm { Saturating, NonSaturating };
enum class SemanticMetric { MutualInformation, Rmse };

// Order of the six objective terms everywhere (log columns, weights, breakdowns).
enum Term : int { kGanA = 0, kGanY, kCycleY, kCycleA, kAeRe, kAeMi, kTermCount };
const char* term_name(int term);

struct LossWeights {
  std::array<double, kTermCount> w{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double operator[](int t) const { return w[static_cast<std::size_t>(t)]; }
  double& operator[](int t) { return w[static_cast<std::size_t>(t)]; }
};

struct Ablation {
  bool bidirectional = true;  // false drops gan_y and the abundance-side cycle from the objective
  bool semantic = true;       // false drops ae_re and ae_mi; AE_p and MINE are never run
  SemanticMetric metric = SemanticMetric::MutualInformation;
  bool negate_mi = true;      // ae_mi = -DV when set, +DV otherwise
  GanForm gan_form = GanForm::Saturating;
};

// Adversarial cross-entropy from discriminator logits.
//   discriminator = -mean log D(real) - mean log(1 - D(fake))
//   generator     =  mean log(1 - D(fake))        (saturating)
//                 = -mean log D(fake)             (non-saturating)
struct AdversarialLoss {
  double discriminator = 0.0;
  double generator = 0.0;
  Eigen::VectorXd d_real;      // d discriminator / d real logits
  Eigen::VectorXd d_fake;      // d discriminator / d fake logits
  Eigen::VectorXd d_generator; // d generator / d fake logits
};

AdversarialLoss adversarial_loss(const Eigen::VectorXd& real_logits, const Eigen::VectorXd& fake_logits, GanForm form);
AdversarialLoss gan_loss_abundance(const Discriminator& d_a, const Tensor& real_a, const Tensor& fake_a, GanForm form);
AdversarialLoss gan_loss_image(const Discriminator& d_y, const Tensor& real_y, const Tensor& fake_y, GanForm form);

// One training batch: normalized image patches, Dirichlet prior patches and
// the row shift used to build MINE marginal pairs.
struct Batch {
  Tensor y;        // (n, L, P, P)
  Tensor a_prior;  // (n, R, P, P)
  int mine_shift = 1;
};

// Forward traces of both generator branches and of the frozen AE_p.
struct GeneratorPass {
  Generator::Trace unmix_y;   // y -> a_hat
  Generator::Trace mix_y;     // [a_hat, plane] -> y_rec
  Generator::Trace mix_a;     // [a_prior, plane] -> y_fake
  Generator::Trace unmix_a;   // y_fake -> a_rec
  Tensor x;                   // linear mixture of a_hat
  std::optional<Autoencoder::Trace> ae;
  Tensor& a_hat() { return unmix_y.out; }
  Tensor& y_fake() { return mix_a.out; }
  const Tensor& a_hat() const { return unmix_y.out; }
  const Tensor& y_fake() const { return mix_a.out; }
};

GeneratorPass forward_generators(LcguModel& model, const Batch& batch, const Ablation& ablation);

struct CycleLoss {
  double image = 0.0;      // L1(G_mix(G_unmix(y)) - y)
  double abundance = 0.0;  // L1(G_unmix(G_mix(a)) - a)
  double total() const { return image + abundance; }
};
CycleLoss cycle_loss(const LcguModel& model, const Tensor& y, const Tensor& a);

struct SemanticLosses {
  double loss3 = 0.0;  // L1(AE_p(x) - x), x = a_hat mixed linearly with M
  double loss4 = 0.0;  // -DV(AE_p(x), y) on local blocks, or RMSE(AE_p(x), y)
};
SemanticLosses semantic_losses(LcguModel& model, const Tensor& a_hat, const Tensor& y, int mine_shift,
                               const Ablation& ablation);

struct LossBreakdown {
  std::array<double, kTermCount> value{};     // raw term values
  std::array<double, kTermCount> weighted{};  // weight * value for enabled terms, 0 otherwise
  std::array<bool, kTermCount> enabled{};
  double total = 0.0;
  double cycle() const { return value[kCycleY] + value[kCycleA]; }
};

// Evaluates the generator objective on a finished forward pass. With
// `backprop` set, gradients of `total` are accumulated into the unmix and mix
// generator parameters only; discriminators, AE_p and MINE are left untouched.
LossBreakdown generator_objective(LcguModel& model, const Batch& batch, const GeneratorPass& pass,
                                  const LossWeights& weights, const Ablation& ablation, bool backprop);

// Forward pass plus objective, no gradients.
LossBreakdown total_loss(LcguModel& model, const Batch& batch, const LossWeights& weights, const Ablation& ablation);

// Discriminator losses on detached fakes; `backprop` accumulates into that
// discriminator's parameters only.
double discriminator_a_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, GanForm form,
                            bool backprop);
double discriminator_y_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, GanForm form,
                            bool backprop);
// -DV on the pass's AE_p output; `backprop` accumulates into MINE parameters.
double mine_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, bool backprop);

}  // namespace unmixlab::lcgu
