#include "unmixlab/baselines.hpp"

#include "unmixlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace unmixlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Model = std::function<void(const Eigen::VectorXd& x, double param, Eigen::VectorXd& g, Eigen::VectorXd& dg)>;

// Projected gradient on the simplex with backtracking for
//   f(a) = ||y - g(M a)||^2.
// Only steps that do not increase f are taken; returns the final objective.
double projected_gradient(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y, const Model& model,
                          double param, Eigen::VectorXd& a, double f, double& step, int max_steps,
                          double min_decrease) {
  const Eigen::Index L = M.rows();
  Eigen::VectorXd g(L), dg(L);
  for (int it = 0; it < max_steps; ++it) {
    const Eigen::VectorXd x = M * a;
    model(x, param, g, dg);
    const Eigen::VectorXd r = y - g;
    const Eigen::VectorXd grad = -2.0 * M.transpose() * r.cwiseProduct(dg);

    bool accepted = false;
    step *= 2.0;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::VectorXd cand = project_to_simplex(a - step * grad);
      const Eigen::VectorXd d = cand - a;
      const double f_new = [&] {
        model(M * cand, param, g, dg);
        if (!g.allFinite()) return kInf;
        return (y - g).squaredNorm();
      }();
      if (f_new <= f + grad.dot(d) + d.squaredNorm() / (2.0 * step) && f_new <= f) {
        const double decrease = f - f_new;
        a = cand;
        f = f_new;
        accepted = true;
        if (decrease < min_decrease * 1e-3) return f;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return f;
}

using ParamDerivative = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double param)>;

// Linearizes g around the current (a, param) and solves the linear problem
// exactly: param is eliminated by projecting out its derivative column, the
// abundances come from FCLS on what remains. Backtracks until f decreases.
// Without `d_param` only the abundances move.
double gauss_newton(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y, const Model& model,
                    const ParamDerivative* d_param, double lo, double hi, double& param, Eigen::VectorXd& a,
                    double f) {
  Eigen::VectorXd g, dg;
  const Eigen::VectorXd x = M * a;
  model(x, param, g, dg);
  if (!g.allFinite() || !dg.allFinite()) return f;
  Eigen::MatrixXd Mw = dg.asDiagonal() * M;
  Eigen::VectorXd target = y - g + dg.cwiseProduct(x);
  Eigen::VectorXd gp;
  double gp2 = 0.0;
  if (d_param) {
    gp = (*d_param)(x, param);
    gp2 = gp.squaredNorm();
    if (gp.allFinite() && gp2 > 0.0) {
      Mw -= gp * (gp.transpose() * Mw) / gp2;
      target -= gp * (gp.dot(target) / gp2);
    } else {
      gp2 = 0.0;
    }
  }
  Eigen::VectorXd cand;
  try {
    cand = FclsSolver(Mw).solve(target);
  } catch (const Error&) {
    return f;
  }
  double cand_param = param;
  if (gp2 > 0.0) {
    const Eigen::VectorXd r = y - g - dg.cwiseProduct(M * cand - x);
    cand_param = std::clamp(param + gp.dot(r) / gp2, lo, hi);
  }
  double t = 1.0;
  for (int tries = 0; tries < 30; ++tries, t *= 0.5) {
    const Eigen::VectorXd c = a + t * (cand - a);
    const double pc = param + t * (cand_param - param);
    model(M * c, pc, g, dg);
    if (!g.allFinite()) continue;
    const double fc = (y - g).squaredNorm();
    if (fc < f) {
      a = c;
      param = pc;
      return fc;
    }
  }
  return f;
}

void ppnm_model(const Eigen::VectorXd& x, double b, Eigen::VectorXd& g, Eigen::VectorXd& dg) {
  g = x + b * x.cwiseProduct(x);
  dg = (1.0 + 2.0 * b * x.array()).matrix();
}

void mlm_model(const Eigen::VectorXd& x, double p, Eigen::VectorXd& g, Eigen::VectorXd& dg) {
  const Eigen::ArrayXd denom = 1.0 - p * x.array();
  if ((denom <= 0.0).any()) {
    g = Eigen::VectorXd::Constant(x.size(), kInf);
    dg = Eigen::VectorXd::Zero(x.size());
    return;
  }
  g = ((1.0 - p) * x.array() / denom).matrix();
  dg = ((1.0 - p) / denom.square()).matrix();
}

const ParamDerivative ppnm_d_param = [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
  return x.cwiseProduct(x);
};

const ParamDerivative mlm_d_param = [](const Eigen::VectorXd& x, double p) -> Eigen::VectorXd {
  const Eigen::ArrayXd xa = x.array();
  return (xa * (xa - 1.0) / (1.0 - p * xa).square()).matrix();
};

// Golden-section search for the minimizer of a 1-D function on [lo, hi].
double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

double pixel_rmse(double objective, Eigen::Index bands) {
  return std::sqrt(std::max(0.0, objective) / static_cast<double>(bands));
}

void check_inputs(const SpectralCube& cube, const Eigen::MatrixXd& M) {
  if (cube.bands() != M.rows()) {
    throw DataError("cube has " + std::to_string(cube.bands()) + " bands but M has " + std::to_string(M.rows()));
  }
  for (float v : cube.values()) {
    if (!std::isfinite(v)) throw DataError("cube contains non-finite values");
  }
}

template <class PixelFn>
FitResult fit_cube(const SpectralCube& cube, const Eigen::MatrixXd& M, bool has_param, PixelFn&& fn) {
  check_inputs(cube, M);
  FitResult result;
  result.abundance = AbundanceMap(cube.height(), cube.width(), static_cast<int>(M.cols()));
  result.residual.resize(cube.pixel_count());
  if (has_param) result.nonlinearity.emplace(cube.pixel_count());
  for (int r = 0; r < cube.height(); ++r) {
    for (int c = 0; c < cube.width(); ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * cube.width() + c;
      const PixelFit fit = fn(cube.pixel_vector(r, c));
      result.abundance.set_pixel(r, c, fit.abundance);
      result.residual[idx] = static_cast<float>(fit.rmse);
      if (has_param) (*result.nonlinearity)[idx] = static_cast<float>(fit.parameter);
    }
  }
  return result;
}

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += u[static_cast<std::size_t>(k)];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

FclsSolver::FclsSolver(const Eigen::MatrixXd& M) : M_(M) {
  if (M.cols() < 2) throw DataError("unmixing needs at least two endmembers");
  if (M.rows() < M.cols()) throw DataError("unmixing needs at least as many bands as endmembers");
  if (!M.allFinite()) throw DataError("endmember matrix contains non-finite values");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0 || s(0) / smin > kMaxCondition) {
    throw NumericalError("endmember matrix is rank deficient (condition number above 1e10)");
  }
  gram_ = M.transpose() * M;
}

Eigen::VectorXd FclsSolver::solve(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::Index R = M_.cols();
  const Eigen::VectorXd f = M_.transpose() * y;
  const double tol = kStationarityTolerance * std::max(1.0, gram_.diagonal().maxCoeff());

  Eigen::VectorXd a = Eigen::VectorXd::Constant(R, 1.0 / static_cast<double>(R));
  std::vector<bool> passive(static_cast<std::size_t>(R), true);

  const int max_iterations = 20 * static_cast<int>(R) + 100;
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < R; ++i)
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    const auto np = static_cast<Eigen::Index>(idx.size());

    // Equality-constrained LS on the passive set: [H 1; 1' 0][s; nu] = [f; 1].
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(np + 1, np + 1);
    Eigen::VectorXd rhs(np + 1);
    for (Eigen::Index i = 0; i < np; ++i) {
      for (Eigen::Index j = 0; j < np; ++j) kkt(i, j) = gram_(idx[i], idx[j]);
      kkt(i, np) = 1.0;
      kkt(np, i) = 1.0;
      rhs(i) = f(idx[i]);
    }
    rhs(np) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(R);
    for (Eigen::Index i = 0; i < np; ++i) s(idx[i]) = sol(i);
    const double nu = sol(np);

    bool feasible = true;
    for (Eigen::Index i : idx) feasible = feasible && s(i) >= 0.0;

    if (feasible) {
      a = s;
      // Multipliers of the bound constraints: mu_i = (H a - f)_i + nu.
      const Eigen::VectorXd mu = gram_ * a - f + Eigen::VectorXd::Constant(R, nu);
      Eigen::Index worst = -1;
      double worst_mu = -tol;
      for (Eigen::Index i = 0; i < R; ++i) {
        if (!passive[static_cast<std::size_t>(i)] && mu(i) < worst_mu) {
          worst_mu = mu(i);
          worst = i;
        }
      }
      if (worst < 0) break;
      passive[static_cast<std::size_t>(worst)] = true;
      continue;
    }

    // Step toward s until the first passive coordinate hits zero.
    double alpha = 1.0;
    Eigen::Index blocking = idx.front();
    for (Eigen::Index i : idx) {
      if (s(i) < 0.0 && a(i) / (a(i) - s(i)) < alpha) {
        alpha = a(i) / (a(i) - s(i));
        blocking = i;
      }
    }
    a += alpha * (s - a);
    a(blocking) = 0.0;
    for (Eigen::Index i : idx) {
      if (a(i) <= 1e-15) {
        a(i) = 0.0;
        passive[static_cast<std::size_t>(i)] = false;
      }
    }
  }
  a = a.cwiseMax(0.0);
  return a / a.sum();
}

double ppnm_objective(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& a, double b) {
  Eigen::VectorXd g, dg;
  ppnm_model(M * a, b, g, dg);
  return (y - g).squaredNorm();
}

double mlm_objective(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Eigen::Ref<const Eigen::VectorXd>& a, double p) {
  Eigen::VectorXd g, dg;
  mlm_model(M * a, p, g, dg);
  if (!g.allFinite()) return kInf;
  return (y - g).squaredNorm();
}

PixelFit fit_ppnm_pixel(const FclsSolver& fcls, const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                        const NonlinearFitOptions& options) {
  PixelFit fit;
  fit.abundance = fcls.solve(y);
  fit.parameter = 0.0;
  double f = ppnm_objective(M, y, fit.abundance, 0.0);
  fit.objective.push_back(f);
  double step = 1.0 / std::max(1e-12, M.squaredNorm());

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double before = f;
    if (!options.freeze_parameter) {
      const Eigen::VectorXd x = M * fit.abundance;
      const Eigen::VectorXd x2 = x.cwiseProduct(x);
      const double denom = x2.squaredNorm();
      if (denom > 0.0) {
        const double b = x2.dot(y - x) / denom;
        const double fb = ppnm_objective(M, y, fit.abundance, b);
        if (fb <= f) {
          fit.parameter = b;
          f = fb;
        }
      }
    }
    f = gauss_newton(M, y, ppnm_model, options.freeze_parameter ? nullptr : &ppnm_d_param, -kInf, kInf, fit.parameter,
                     fit.abundance, f);
    f = projected_gradient(M, y, ppnm_model, fit.parameter, fit.abundance, f, step, 20, options.min_decrease);
    fit.objective.push_back(f);
    if (before - f < options.min_decrease) break;
  }
  fit.rmse = pixel_rmse(f, M.rows());
  return fit;
}

PixelFit fit_mlm_pixel(const FclsSolver& fcls, const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const NonlinearFitOptions& options) {
  constexpr double kMaxP = 0.99;
  PixelFit fit;
  fit.abundance = fcls.solve(y);
  fit.parameter = 0.0;
  double f = mlm_objective(M, y, fit.abundance, 0.0);
  fit.objective.push_back(f);
  double step = 1.0 / std::max(1e-12, M.squaredNorm());

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double before = f;
    if (!options.freeze_parameter) {
      const auto obj = [&](double p) { return mlm_objective(M, y, fit.abundance, p); };
      const double p = golden_section(obj, 0.0, kMaxP, 1e-10);
      const double fp = obj(p);
      if (fp <= f) {
        fit.parameter = p;
        f = fp;
      }
    }
    f = gauss_newton(M, y, mlm_model, options.freeze_parameter ? nullptr : &mlm_d_param, 0.0, kMaxP, fit.parameter,
                     fit.abundance, f);
    f = projected_gradient(M, y, mlm_model, fit.parameter, fit.abundance, f, step, 20, options.min_decrease);
    fit.objective.push_back(f);
    if (before - f < options.min_decrease) break;
  }
  fit.rmse = pixel_rmse(f, M.rows());
  return fit;
}

FitResult fcls(const SpectralCube& cube, const EndmemberMatrix& M) { return fcls(cube, M.signatures); }

FitResult fcls(const SpectralCube& cube, const Eigen::MatrixXd& M) {
  const FclsSolver solver(M);
  return fit_cube(cube, M, false, [&](const Eigen::VectorXd& y) {
    PixelFit fit;
    fit.abundance = solver.solve(y);
    fit.rmse = pixel_rmse((y - M * fit.abundance).squaredNorm(), M.rows());
    return fit;
  });
}

FitResult fit_ppnm(const SpectralCube& cube, const Eigen::MatrixXd& M, const NonlinearFitOptions& options) {
  const FclsSolver solver(M);
  return fit_cube(cube, M, true, [&](const Eigen::VectorXd& y) { return fit_ppnm_pixel(solver, M, y, options); });
}

FitResult fit_mlm(const SpectralCube& cube, const Eigen::MatrixXd& M, const NonlinearFitOptions& options) {
  const FclsSolver solver(M);
  return fit_cube(cube, M, true, [&](const Eigen::VectorXd& y) { return fit_mlm_pixel(solver, M, y, options); });
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "fcls" || name == "FCLS") return BaselineMethod::FCLS;
  if (name == "ppnm" || name == "PPNM") return BaselineMethod::PPNM;
  if (name == "mlm" || name == "MLM") return BaselineMethod::MLM;
  throw ConfigError("unknown baseline method: " + name);
}

std::string to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::FCLS: return "FCLS";
    case BaselineMethod::PPNM: return "PPNM";
    case BaselineMethod::MLM: return "MLM";
  }
  return "?";
}

FitResult run_baseline(BaselineMethod method, const SpectralCube& cube, const Eigen::MatrixXd& M) {
  switch (method) {
    case BaselineMethod::FCLS: return fcls(cube, M);
    case BaselineMethod::PPNM: return fit_ppnm(cube, M);
    case BaselineMethod::MLM: return fit_mlm(cube, M);
  }
  throw ConfigError("unknown baseline method");
}

}  // namespace unmixlab
