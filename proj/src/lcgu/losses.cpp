#include "unmixlab/lcgu/losses.hpp"

#include "unmixlab/error.hpp"
#include "unmixlab/lcgu/mine.hpp"

#include <cmath>

namespace unmixlab::lcgu {
namespace {

using nn::sigmoid;
using nn::softplus;

void check_batch(const LcguModel& model, const Batch& batch) {
  const Architecture& a = model.architecture();
  if (batch.y.c != a.bands || batch.y.h != a.patch || batch.y.w != a.patch)
    throw DataError("image batch " + batch.y.shape_string() + " does not match the model");
  if (batch.a_prior.c != a.endmembers || batch.a_prior.h != a.patch || batch.a_prior.w != a.patch ||
      batch.a_prior.n != batch.y.n)
    throw DataError("prior batch " + batch.a_prior.shape_string() + " does not match the model");
}

void require_semantic_ready(const LcguModel& model) {
  if (!model.ae_trained) throw ConfigError("semantic losses need a pre-trained AE_p; enable pretraining");
}

Tensor scaled(Tensor t, double s) {
  for (double& v : t.data) v *= s;
  return t;
}

int normalized_shift(int shift, Eigen::Index rows) {
  if (rows < 2) throw DataError("MINE needs at least two local blocks per batch");
  const int r = static_cast<int>(rows);
  int s = ((shift % r) + r) % r;
  return s == 0 ? 1 : s;
}

struct SemanticEval {
  double loss3 = 0.0, loss4 = 0.0;
  Tensor d_x;
};

// Both semantic terms on x and its AE_p reconstruction. With backprop, d_x is
// the gradient of w3 * loss3 + w4 * loss4 w.r.t. x; AE_p and MINE parameters
// are never touched.
SemanticEval eval_semantic(LcguModel& model, const Tensor& x, const Autoencoder::Trace& ae, const Tensor& y,
                           int mine_shift, const Ablation& ablation, double w3, double w4, bool backprop) {
  SemanticEval out;
  const Tensor& u = ae.out;
  Tensor g3;
  out.loss3 = nn::l1_mean(u, x, &g3);

  Tensor du(u.n, u.c, u.h, u.w);
  if (ablation.metric == SemanticMetric::MutualInformation) {
    const int block = model.architecture().mine_block;
    const Eigen::MatrixXd U = local_blocks(u, block);
    const Eigen::MatrixXd V = local_blocks(y, block);
    const int shift = normalized_shift(mine_shift, U.rows());
    const double sign = ablation.negate_mi ? -1.0 : 1.0;
    const DvBound dv = donsker_varadhan(model.mine, pair_rows(U, V), pair_rows(U, V, shift), sign * w4, false);
    out.loss4 = sign * dv.value;
    if (backprop) {
      const Eigen::MatrixXd dU = dv.d_joint.leftCols(U.cols()) + dv.d_marginal.leftCols(U.cols());
      du += local_blocks_backward(dU, u, block);
    }
  } else {
    if (!u.same_shape(y)) throw DataError("RMSE semantic term needs matching shapes");
    double ss = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) ss += (u.data[i] - y.data[i]) * (u.data[i] - y.data[i]);
    const double n = static_cast<double>(u.size());
    out.loss4 = std::sqrt(ss / n);
    if (backprop && out.loss4 > 0.0)
      for (std::size_t i = 0; i < u.size(); ++i) du.data[i] = w4 * (u.data[i] - y.data[i]) / (n * out.loss4);
  }

  if (backprop) {
    du += scaled(g3, w3);
    out.d_x = model.ae_p.backward(ae, du, false);
    out.d_x += scaled(g3, -w3);
  }
  return out;
}

void check_finite(const LossBreakdown& b) {
  for (int t = 0; t < kTermCount; ++t)
    if (!std::isfinite(b.value[static_cast<std::size_t>(t)]))
      throw NumericalError(std::string("non-finite loss term '") + term_name(t) + "'");
}

}  // namespace

const char* term_name(int term) {
  static const char* names[kTermCount] = {"gan_a", "gan_y", "cycle_y", "cycle_a", "ae_re", "ae_mi"};
  if (term < 0 || term >= kTermCount) throw Error("bad loss term index");
  return names[term];
}

AdversarialLoss adversarial_loss(const Eigen::VectorXd& real, const Eigen::VectorXd& fake, GanForm form) {
  AdversarialLoss out;
  const double nr = static_cast<double>(real.size()), nf = static_cast<double>(fake.size());
  out.d_real.resize(real.size());
  out.d_fake.resize(fake.size());
  out.d_generator.resize(fake.size());
  double real_term = 0.0, fake_term = 0.0, gen = 0.0;
  for (Eigen::Index i = 0; i < real.size(); ++i) {
    real_term += softplus(-real(i));
    out.d_real(i) = -sigmoid(-real(i)) / nr;
  }
  for (Eigen::Index i = 0; i < fake.size(); ++i) {
    fake_term += softplus(fake(i));
    out.d_fake(i) = sigmoid(fake(i)) / nf;
    if (form == GanForm::Saturating) {
      gen -= softplus(fake(i));
      out.d_generator(i) = -sigmoid(fake(i)) / nf;
    } else {
      gen += softplus(-fake(i));
      out.d_generator(i) = -sigmoid(-fake(i)) / nf;
    }
  }
  out.discriminator = (nr > 0 ? real_term / nr : 0.0) + (nf > 0 ? fake_term / nf : 0.0);
  out.generator = nf > 0 ? gen / nf : 0.0;
  return out;
}

AdversarialLoss gan_loss_abundance(const Discriminator& d_a, const Tensor& real_a, const Tensor& fake_a, GanForm form) {
  return adversarial_loss(d_a.forward(real_a), d_a.forward(fake_a), form);
}

AdversarialLoss gan_loss_image(const Discriminator& d_y, const Tensor& real_y, const Tensor& fake_y, GanForm form) {
  return adversarial_loss(d_y.forward(real_y), d_y.forward(fake_y), form);
}

GeneratorPass forward_generators(LcguModel& model, const Batch& batch, const Ablation& ablation) {
  check_batch(model, batch);
  GeneratorPass pass;
  model.unmix.forward(batch.y, &pass.unmix_y);
  model.mix.forward(model.mix_input(pass.a_hat()), &pass.mix_y);
  model.mix.forward(model.mix_input(batch.a_prior), &pass.mix_a);
  model.unmix.forward(pass.y_fake(), &pass.unmix_a);
  if (ablation.semantic) {
    require_semantic_ready(model);
    pass.x = linear_mixture(pass.a_hat(), model.endmembers());
    pass.ae.emplace();
    model.ae_p.forward(pass.x, &*pass.ae);
  }
  return pass;
}

CycleLoss cycle_loss(const LcguModel& model, const Tensor& y, const Tensor& a) {
  CycleLoss out;
  out.image = nn::l1_mean(model.mix_patch(model.unmix_patch(y)), y);
  out.abundance = nn::l1_mean(model.unmix_patch(model.mix_patch(a)), a);
  return out;
}

SemanticLosses semantic_losses(LcguModel& model, const Tensor& a_hat, const Tensor& y, int mine_shift,
                               const Ablation& ablation) {
  require_semantic_ready(model);
  const Tensor x = linear_mixture(a_hat, model.endmembers());
  Autoencoder::Trace ae;
  model.ae_p.forward(x, &ae);
  const SemanticEval e = eval_semantic(model, x, ae, y, mine_shift, ablation, 1.0, 1.0, false);
  return {e.loss3, e.loss4};
}

LossBreakdown generator_objective(LcguModel& model, const Batch& batch, const GeneratorPass& pass,
                                  const LossWeights& weights, const Ablation& ablation, bool backprop) {
  LossBreakdown out;
  out.enabled = {true, ablation.bidirectional, true, ablation.bidirectional, ablation.semantic, ablation.semantic};
  const int R = model.architecture().endmembers;
  auto active = [&](int t) { return out.enabled[static_cast<std::size_t>(t)] && weights[t] != 0.0; };

  // unmixing-mixing branch: y -> a_hat -> y_rec
  Tensor d_a_hat(pass.a_hat().n, pass.a_hat().c, pass.a_hat().h, pass.a_hat().w);
  {
    Tensor g;
    out.value[kCycleY] = nn::l1_mean(pass.mix_y.out, batch.y, &g);
    if (backprop && active(kCycleY)) {
      const Tensor d_in = model.mix.backward(pass.mix_y, scaled(std::move(g), weights[kCycleY]));
      d_a_hat += slice_channels(d_in, 0, R);
    }
  }
  {
    Discriminator::Trace tr;
    const AdversarialLoss adv = adversarial_loss(Eigen::VectorXd(), model.d_a.forward(pass.a_hat(), &tr), ablation.gan_form);
    out.value[kGanA] = adv.generator;
    if (backprop && active(kGanA)) d_a_hat += model.d_a.backward(tr, weights[kGanA] * adv.d_generator, false);
  }
  if (ablation.semantic) {
    if (!pass.ae) throw Error("forward pass was run without the semantic branch");
    const bool need = backprop && (active(kAeRe) || active(kAeMi));
    const SemanticEval e = eval_semantic(model, pass.x, *pass.ae, batch.y, batch.mine_shift, ablation,
                                         active(kAeRe) ? weights[kAeRe] : 0.0, active(kAeMi) ? weights[kAeMi] : 0.0,
                                         need);
    out.value[kAeRe] = e.loss3;
    out.value[kAeMi] = e.loss4;
    if (need) d_a_hat += linear_mixture_backward(e.d_x, model.endmembers());
  }
  if (backprop) model.unmix.backward(pass.unmix_y, d_a_hat);

  // mixing-unmixing branch: a_prior -> y_fake -> a_rec
  {
    Tensor g;
    out.value[kCycleA] = nn::l1_mean(pass.unmix_a.out, batch.a_prior, &g);
    Tensor d_y_fake(pass.y_fake().n, pass.y_fake().c, pass.y_fake().h, pass.y_fake().w);
    bool touched = false;
    if (backprop && active(kCycleA)) {
      d_y_fake += model.unmix.backward(pass.unmix_a, scaled(std::move(g), weights[kCycleA]));
      touched = true;
    }
    if (ablation.bidirectional) {
      Discriminator::Trace tr;
      const AdversarialLoss adv =
          adversarial_loss(Eigen::VectorXd(), model.d_y.forward(pass.y_fake(), &tr), ablation.gan_form);
      out.value[kGanY] = adv.generator;
      if (backprop && active(kGanY)) {
        d_y_fake += model.d_y.backward(tr, weights[kGanY] * adv.d_generator, false);
        touched = true;
      }
    }
    if (touched) model.mix.backward(pass.mix_a, d_y_fake);
  }

  check_finite(out);
  for (int t = 0; t < kTermCount; ++t) {
    const auto i = static_cast<std::size_t>(t);
    out.weighted[i] = out.enabled[i] ? weights[t] * out.value[i] : 0.0;
    out.total += out.weighted[i];
  }
  if (!std::isfinite(out.total)) throw NumericalError("non-finite total loss");
  return out;
}

LossBreakdown total_loss(LcguModel& model, const Batch& batch, const LossWeights& weights, const Ablation& ablation) {
  const GeneratorPass pass = forward_generators(model, batch, ablation);
  return generator_objective(model, batch, pass, weights, ablation, false);
}

double discriminator_a_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, GanForm form,
                            bool backprop) {
  Discriminator::Trace tr_real, tr_fake;
  const Eigen::VectorXd zr = model.d_a.forward(batch.a_prior, &tr_real);
  const Eigen::VectorXd zf = model.d_a.forward(pass.a_hat(), &tr_fake);
  const AdversarialLoss adv = adversarial_loss(zr, zf, form);
  if (!std::isfinite(adv.discriminator)) throw NumericalError("non-finite loss term 'd_a'");
  if (backprop) {
    model.d_a.backward(tr_real, adv.d_real);
    model.d_a.backward(tr_fake, adv.d_fake);
  }
  return adv.discriminator;
}

double discriminator_y_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, GanForm form,
                            bool backprop) {
  Discriminator::Trace tr_real, tr_fake;
  const Eigen::VectorXd zr = model.d_y.forward(batch.y, &tr_real);
  const Eigen::VectorXd zf = model.d_y.forward(pass.y_fake(), &tr_fake);
  const AdversarialLoss adv = adversarial_loss(zr, zf, form);
  if (!std::isfinite(adv.discriminator)) throw NumericalError("non-finite loss term 'd_y'");
  if (backprop) {
    model.d_y.backward(tr_real, adv.d_real);
    model.d_y.backward(tr_fake, adv.d_fake);
  }
  return adv.discriminator;
}

double mine_step(LcguModel& model, const Batch& batch, const GeneratorPass& pass, bool backprop) {
  if (!pass.ae) throw Error("forward pass was run without the semantic branch");
  const int block = model.architecture().mine_block;
  const Eigen::MatrixXd U = local_blocks(pass.ae->out, block);
  const Eigen::MatrixXd V = local_blocks(batch.y, block);
  const int shift = normalized_shift(batch.mine_shift, U.rows());
  const DvBound dv = donsker_varadhan(model.mine, pair_rows(U, V), pair_rows(U, V, shift), -1.0, backprop);
  if (!std::isfinite(dv.value)) throw NumericalError("non-finite loss term 'mine'");
  return -dv.value;
}

}  // namespace unmixlab::lcgu
