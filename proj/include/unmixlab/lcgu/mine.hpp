#pragma once

#include "unmixlab/lcgu/networks.hpp"

#include <cstdint>

namespace unmixlab::lcgu {

// Splits every sample of t into non-overlapping block x block tiles and
// flattens each tile (channel-major) into one row. Row order: sample, tile row,
// tile column.
Eigen::MatrixXd local_blocks(const Tensor& t, int block);
// Adjoint of local_blocks: scatters row gradients back onto a tensor shaped like `like`.
Tensor local_blocks_backward(const Eigen::MatrixXd& d_rows, const Tensor& like, int block);

// [u | v] row pairs. With shift > 0 the v rows are rolled by `shift`, which
// pairs every u with a v from another location (the product of marginals).
Eigen::MatrixXd pair_rows(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int shift = 0);

struct DvBound {
  double value = 0.0;  // mean T(joint) - log mean exp T(marginal)
  Eigen::MatrixXd d_joint, d_marginal;
};

// Donsker-Varadhan lower bound. Gradients are scaled by `upstream`; MINE
// parameter gradients (also scaled) are accumulated when `accumulate` is set.
DvBound donsker_varadhan(MineNetwork& mine, const Eigen::MatrixXd& joint, const Eigen::MatrixXd& marginal,
                         double upstream = 1.0, bool accumulate = false);

struct MineTrainOptions {
  int hidden = 64;
  int batch = 512;
  int steps = 4000;
  double learning_rate = 1e-3;
  int evaluation_shuffles = 8;
  std::uint64_t seed = 0;
};

// Trains a fresh statistics network on paired samples (row i of x with row i
// of y) and returns the converged DV estimate in nats, evaluated on all rows
// against shuffled pairings.
double estimate_mutual_information(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                   const MineTrainOptions& options = {});

}  // namespace unmixlab::lcgu
