#include "unmixlab/lcgu/mine.hpp"

#include "unmixlab/error.hpp"
#include "unmixlab/nn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unmixlab::lcgu {

Eigen::MatrixXd local_blocks(const Tensor& t, int block) {
  if (block < 1 || t.h % block != 0 || t.w % block != 0)
    throw DataError("local block size " + std::to_string(block) + " does not tile " + t.shape_string());
  const int by = t.h / block, bx = t.w / block;
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(t.n) * by * bx, static_cast<Eigen::Index>(t.c) * block * block);
  Eigen::Index r = 0;
  for (int b = 0; b < t.n; ++b)
    for (int ty = 0; ty < by; ++ty)
      for (int tx = 0; tx < bx; ++tx, ++r) {
        Eigen::Index col = 0;
        for (int ch = 0; ch < t.c; ++ch)
          for (int i = 0; i < block; ++i)
            for (int j = 0; j < block; ++j) rows(r, col++) = t.at(b, ch, ty * block + i, tx * block + j);
      }
  return rows;
}

Tensor local_blocks_backward(const Eigen::MatrixXd& d_rows, const Tensor& like, int block) {
  Tensor d(like.n, like.c, like.h, like.w);
  const int by = like.h / block, bx = like.w / block;
  Eigen::Index r = 0;
  for (int b = 0; b < like.n; ++b)
    for (int ty = 0; ty < by; ++ty)
      for (int tx = 0; tx < bx; ++tx, ++r) {
        Eigen::Index col = 0;
        for (int ch = 0; ch < like.c; ++ch)
          for (int i = 0; i < block; ++i)
            for (int j = 0; j < block; ++j) d.at(b, ch, ty * block + i, tx * block + j) += d_rows(r, col++);
      }
  return d;
}

Eigen::MatrixXd pair_rows(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int shift) {
  if (u.rows() != v.rows()) throw DataError("pair_rows: row counts differ");
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd out(n, u.cols() + v.cols());
  out.leftCols(u.cols()) = u;
  for (Eigen::Index i = 0; i < n; ++i) out.row(i).tail(v.cols()) = v.row((i + shift) % n);
  return out;
}

DvBound donsker_varadhan(MineNetwork& mine, const Eigen::MatrixXd& joint, const Eigen::MatrixXd& marginal,
                         double upstream, bool accumulate) {
  if (joint.rows() < 1 || marginal.rows() < 1) throw DataError("MINE needs at least one joint and one marginal sample");
  MineNetwork::Trace tj, tm;
  const Eigen::VectorXd t_joint = mine.forward(joint, &tj);
  const Eigen::VectorXd t_marg = mine.forward(marginal, &tm);

  const double mx = t_marg.maxCoeff();
  const Eigen::ArrayXd e = (t_marg.array() - mx).exp();
  const double sum_e = e.sum();
  const double log_mean_exp = mx + std::log(sum_e / static_cast<double>(t_marg.size()));

  DvBound out;
  out.value = t_joint.mean() - log_mean_exp;
  const Eigen::VectorXd g_joint = Eigen::VectorXd::Constant(t_joint.size(), upstream / static_cast<double>(t_joint.size()));
  const Eigen::VectorXd g_marg = (-upstream) * (e / sum_e).matrix();
  out.d_joint = mine.backward(tj, g_joint, accumulate);
  out.d_marginal = mine.backward(tm, g_marg, accumulate);
  return out;
}

double estimate_mutual_information(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MineTrainOptions& o) {
  if (x.rows() != y.rows() || x.rows() < 2) throw DataError("MI estimation needs at least two paired samples");
  const Eigen::Index n = x.rows();
  const int batch = static_cast<int>(std::min<Eigen::Index>(o.batch, n));

  std::mt19937_64 rng(o.seed);
  MineNetwork mine("mine", static_cast<int>(x.cols() + y.cols()), o.hidden);
  mine.reset(rng);
  nn::AdamSettings settings;
  settings.learning_rate = o.learning_rate;
  settings.beta1 = 0.9;
  nn::Adam adam(mine.parameters(), settings);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::MatrixXd joint(batch, x.cols() + y.cols()), marginal(batch, x.cols() + y.cols());
  for (int step = 0; step < o.steps; ++step) {
    for (int i = 0; i < batch; ++i) {
      const Eigen::Index a = pick(rng), b = pick(rng);
      joint.row(i) << x.row(a), y.row(a);
      marginal.row(i) << x.row(a), y.row(b);
    }
    adam.zero_grad();
    const DvBound dv = donsker_varadhan(mine, joint, marginal, -1.0, true);
    if (!std::isfinite(dv.value)) throw NumericalError("MINE training diverged at step " + std::to_string(step));
    adam.step();
  }

  Eigen::MatrixXd all_joint(n, x.cols() + y.cols());
  all_joint << x, y;
  double total = 0.0;
  for (int s = 0; s < o.evaluation_shuffles; ++s) {
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd all_marg(n, x.cols() + y.cols());
    for (Eigen::Index i = 0; i < n; ++i) all_marg.row(i) << x.row(i), y.row(order[static_cast<std::size_t>(i)]);
    total += donsker_varadhan(mine, all_joint, all_marg).value;
  }
  return total / o.evaluation_shuffles;
}

}  // namespace unmixlab::lcgu
