#pragma once

#include "unmixlab/cube.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unmixlab {

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

// Fully constrained least squares for one pixel:
//   argmin ||y - M a||  s.t.  a >= 0, sum(a) = 1
// solved by a primal active-set method on the normal equations.
class FclsSolver {
 public:
  // Throws NumericalError if cond(M) exceeds kMaxCondition, DataError if R < 2.
  explicit FclsSolver(const Eigen::MatrixXd& M);

  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  static constexpr double kMaxCondition = 1e10;
  static constexpr double kStationarityTolerance = 1e-8;

 private:
  Eigen::MatrixXd M_;
  Eigen::MatrixXd gram_;
};

struct PixelFit {
  Eigen::VectorXd abundance;
  double parameter = 0.0;            // b for PPNM, P for MLM
  std::vector<double> objective;     // squared residual after init and each iteration
  double rmse = 0.0;
};

struct NonlinearFitOptions {
  int max_iterations = 200;
  double min_decrease = 1e-9;
  bool freeze_parameter = false;  // keep b = 0 / P = 0 (collapse to the linear fit)
};

PixelFit fit_ppnm_pixel(const FclsSolver& fcls, const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                        const NonlinearFitOptions& options = {});
PixelFit fit_mlm_pixel(const FclsSolver& fcls, const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const NonlinearFitOptions& options = {});

// Squared residual of the MLM model; +inf where 1 - P x <= 0.
double mlm_objective(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Eigen::Ref<const Eigen::VectorXd>& a, double p);
double ppnm_objective(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& a, double b);

struct FitResult {
  AbundanceMap abundance;
  std::optional<std::vector<float>> nonlinearity;  // H*W map of b or P
  std::vector<float> residual;                     // H*W per-pixel RMSE
};

FitResult fcls(const SpectralCube& cube, const EndmemberMatrix& M);
FitResult fcls(const SpectralCube& cube, const Eigen::MatrixXd& M);
FitResult fit_ppnm(const SpectralCube& cube, const Eigen::MatrixXd& M, const NonlinearFitOptions& options = {});
FitResult fit_mlm(const SpectralCube& cube, const Eigen::MatrixXd& M, const NonlinearFitOptions& options = {});

enum class BaselineMethod { FCLS, PPNM, MLM };
BaselineMethod parse_baseline_method(const std::string& name);
std::string to_string(BaselineMethod method);
FitResult run_baseline(BaselineMethod method, const SpectralCube& cube, const Eigen::MatrixXd& M);

}  // namespace unmixlab
