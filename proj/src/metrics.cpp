#include "unmixlab/metrics.hpp"

#include "unmixlab/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace unmixlab {
namespace {

void require_same_shape(const PixelGrid& a, const PixelGrid& b, const char* what) {
  if (!a.same_shape(b)) throw DataError(std::string(what) + ": shape mismatch");
  if (a.pixel_count() == 0) throw DataError(std::string(what) + ": empty input");
}

// Hungarian algorithm on a square cost matrix; returns row -> column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1), v(n + 1);
  std::vector<int> p(n + 1), way(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace

double vector_angle(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw DataError("angle undefined for a zero vector");
  // Kahan's form: same angle as the clamped arccos, without its loss of
  // precision near 0 and pi.
  const Eigen::VectorXd a = u * nv, b = v * nu;
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

double symmetric_kl(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  const Eigen::ArrayXd pf = p.array().max(kAidFloor);
  const Eigen::ArrayXd qf = q.array().max(kAidFloor);
  return ((pf - qf) * (pf / qf).log()).sum();
}

double aad(const AbundanceMap& a, const AbundanceMap& a_hat) {
  require_same_shape(a, a_hat, "aad");
  double total = 0.0;
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) total += vector_angle(a.pixel_vector(r, c), a_hat.pixel_vector(r, c));
  return total / static_cast<double>(a.pixel_count());
}

double aid(const AbundanceMap& a, const AbundanceMap& a_hat) {
  require_same_shape(a, a_hat, "aid");
  double total = 0.0;
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) total += symmetric_kl(a.pixel_vector(r, c), a_hat.pixel_vector(r, c));
  return total / static_cast<double>(a.pixel_count());
}

double sad(const SpectralCube& y, const SpectralCube& y_hat) {
  require_same_shape(y, y_hat, "sad");
  double total = 0.0;
  for (int r = 0; r < y.height(); ++r)
    for (int c = 0; c < y.width(); ++c) total += vector_angle(y.pixel_vector(r, c), y_hat.pixel_vector(r, c));
  return total / static_cast<double>(y.pixel_count());
}

double re(const SpectralCube& y, const SpectralCube& y_hat) {
  require_same_shape(y, y_hat, "re");
  double sq = 0.0;
  const auto& a = y.values();
  const auto& b = y_hat.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(a.size()));
}

SpectralCube reconstruct_linear(const AbundanceMap& a, const Eigen::MatrixXd& M) {
  if (M.cols() != a.endmembers()) throw DataError("reconstruct_linear: M column count differs from R");
  SpectralCube y(a.height(), a.width(), static_cast<int>(M.rows()));
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) y.set_pixel(r, c, M * a.pixel_vector(r, c));
  y.provenance = "linear reconstruction";
  return y;
}

EvalReport evaluate_abundance(const AbundanceMap& truth, const AbundanceMap& estimate,
                              const std::vector<std::string>& names) {
  EvalReport report;
  report.aad = aad(truth, estimate);
  report.aid = aid(truth, estimate);
  report.endmember_names = names;
  const int R = truth.endmembers();
  report.per_endmember_rmse.assign(R, 0.0);
  for (int r = 0; r < truth.height(); ++r) {
    for (int c = 0; c < truth.width(); ++c) {
      for (int k = 0; k < R; ++k) {
        const double d = static_cast<double>(truth.at(r, c, k)) - estimate.at(r, c, k);
        report.per_endmember_rmse[k] += d * d;
      }
    }
  }
  for (double& v : report.per_endmember_rmse) v = std::sqrt(v / static_cast<double>(truth.pixel_count()));
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("aad", aad);
  put("aid", aid);
  put("re", re);
  put("sad", sad);
  if (!per_endmember_rmse.empty()) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t k = 0; k < per_endmember_rmse.size(); ++k) {
      per.push_back({{"name", k < endmember_names.size() ? endmember_names[k] : std::to_string(k)},
                     {"abundance_rmse", per_endmember_rmse[k]}});
    }
    j["per_endmember"] = per;
  }
  return j.dump(2);
}

std::string EvalReport::csv_header() { return "aad,aid,re,sad"; }

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out << std::setprecision(10);
  auto put = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  put(aad);
  out << ',';
  put(aid);
  out << ',';
  put(re);
  out << ',';
  put(sad);
  return out.str();
}

std::vector<int> align_endmembers(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimated) {
  if (reference.cols() != estimated.cols() || reference.rows() != estimated.rows()) {
    throw DataError("align_endmembers: matrices differ in shape");
  }
  const auto n = reference.cols();
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = vector_angle(reference.col(i), estimated.col(j));
  return hungarian(cost);
}

AbundanceMap permute_channels(const AbundanceMap& a, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != a.endmembers()) throw DataError("permutation length differs from R");
  AbundanceMap out(a.height(), a.width(), a.endmembers());
  out.provenance = a.provenance;
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c)
      for (int k = 0; k < a.endmembers(); ++k) out.at(r, c, k) = a.at(r, c, perm[k]);
  return out;
}

}  // namespace unmixlab
