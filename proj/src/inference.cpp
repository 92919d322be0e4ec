#include "folomin/inference.hpp"

#include "folomin/linalg.hpp"
#include "folomin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace folomin {

namespace {

RowCovariance finish(Index index, Matrix bread, Matrix meat, double scale, const char* what) {
  bread = linalg::symmetrize(bread);
  meat = linalg::symmetrize(meat);
  if (!(linalg::condition_number(bread) <= 1e10)) {
    throw NumericalError(std::string("ill-conditioned bread matrix for ") + what + " row " +
                         std::to_string(index + 1));
  }
  const Matrix inv = bread.ldlt().solve(Matrix::Identity(bread.rows(), bread.cols()));
  RowCovariance out;
  out.index = index;
  out.sandwich = linalg::symmetrize(inv * meat * inv);
  out.bread = std::move(bread);
  out.meat = std::move(meat);
  out.scale = scale;
  return out;
}

void check_shapes(const ResponseMatrix& data, const ParamPair& params) {
  if (data.n() != params.n() || data.q() != params.q()) {
    throw UsageError("inference: parameter shapes do not match the data");
  }
}

}  // namespace

RowCovariance plugin_covariance_A(const ResponseMatrix& data, const ParamPair& params, Index j) {
  check_shapes(data, params);
  if (j < 0 || j >= params.q()) throw UsageError("plugin_covariance_A: row out of range");
  const FamilyKind k = data.family().kind();
  const Index r = params.r();
  const Matrix& Z = params.Z;
  const Vector theta = Z * params.A.row(j).transpose();
  Matrix bread = Matrix::Zero(r, r), meat = Matrix::Zero(r, r);
  Vector w2(Z.rows()), w1(Z.rows());
  for (Index i = 0; i < Z.rows(); ++i) {
    if (!std::isfinite(theta(i))) throw NumericalError("inference: non-finite theta");
    const double y = data(i, j);
    w2(i) = detail::risk_d2(k, theta(i), y);
    const double d = detail::risk_d1(k, theta(i), y);
    w1(i) = d * d;
  }
  const double n = static_cast<double>(Z.rows());
  bread = Z.transpose() * w2.asDiagonal() * Z / n;
  meat = Z.transpose() * w1.asDiagonal() * Z / n;
  return finish(j, std::move(bread), std::move(meat), n, "A");
}

RowCovariance plugin_covariance_Z(const ResponseMatrix& data, const ParamPair& params, Index i) {
  check_shapes(data, params);
  if (i < 0 || i >= params.n()) throw UsageError("plugin_covariance_Z: row out of range");
  const FamilyKind k = data.family().kind();
  const Matrix& A = params.A;
  const Vector theta = A * params.Z.row(i).transpose();
  Vector w2(A.rows()), w1(A.rows());
  for (Index j = 0; j < A.rows(); ++j) {
    if (!std::isfinite(theta(j))) throw NumericalError("inference: non-finite theta");
    const double y = data(i, j);
    w2(j) = detail::risk_d2(k, theta(j), y);
    const double d = detail::risk_d1(k, theta(j), y);
    w1(j) = d * d;
  }
  const double q = static_cast<double>(A.rows());
  Matrix bread = A.transpose() * w2.asDiagonal() * A / q;
  Matrix meat = A.transpose() * w1.asDiagonal() * A / q;
  return finish(i, std::move(bread), std::move(meat), q, "Z");
}

std::vector<RowCovariance> plugin_covariances_A(const ResponseMatrix& data,
                                                const ParamPair& params) {
  std::vector<RowCovariance> out(static_cast<std::size_t>(params.q()));
  parallel_for(out.size(), [&](std::size_t j) {
    out[j] = plugin_covariance_A(data, params, static_cast<Index>(j));
  });
  return out;
}

std::vector<RowCovariance> plugin_covariances_Z(const ResponseMatrix& data,
                                                const ParamPair& params) {
  std::vector<RowCovariance> out(static_cast<std::size_t>(params.n()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = plugin_covariance_Z(data, params, static_cast<Index>(i));
  });
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw UsageError("normal_quantile: p must lie in [0, 1]");
  }
  // Acklam's rational approximation, relative error below 1.2e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley refinement step against erfc.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

WaldTable wald_from_se(const Matrix& estimate, const Matrix& se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (se.rows() != estimate.rows() || se.cols() != estimate.cols()) {
    throw UsageError("wald: standard errors must match the estimate");
  }
  const double mult = normal_quantile(0.5 * (1.0 + level));
  WaldTable t;
  t.level = level;
  t.estimate = estimate;
  t.se = se;
  t.z.resize(estimate.rows(), estimate.cols());
  t.p.resize(estimate.rows(), estimate.cols());
  t.lower.resize(estimate.rows(), estimate.cols());
  t.upper.resize(estimate.rows(), estimate.cols());
  for (Index k = 0; k < estimate.rows(); ++k) {
    for (Index l = 0; l < estimate.cols(); ++l) {
      const double s = se(k, l);
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw NumericalError("degenerate variance at entry (" + std::to_string(k + 1) + ", " +
                             std::to_string(l + 1) + ")");
      }
      const double e = estimate(k, l);
      t.z(k, l) = e / s;
      t.p(k, l) = two_sided_p(e / s);
      t.lower(k, l) = e - mult * s;
      t.upper(k, l) = e + mult * s;
    }
  }
  return t;
}

WaldTable wald_intervals(const Matrix& estimate, const std::vector<RowCovariance>& rows,
                         double level) {
  if (static_cast<Index>(rows.size()) != estimate.rows()) {
    throw UsageError("wald_intervals: one covariance per row is required");
  }
  Matrix se(estimate.rows(), estimate.cols());
  for (Index k = 0; k < estimate.rows(); ++k) {
    const RowCovariance& rc = rows[static_cast<std::size_t>(k)];
    for (Index l = 0; l < estimate.cols(); ++l) {
      const double v = rc.sandwich(l, l);
      if (!(v > 0.0)) {
        throw NumericalError("degenerate variance at entry (" + std::to_string(k + 1) + ", " +
                             std::to_string(l + 1) + ")");
      }
      se(k, l) = std::sqrt(v / rc.scale);
    }
  }
  return wald_from_se(estimate, se, level);
}

BhResult bh_adjust(const std::vector<double>& p_values, double alpha) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("bh_adjust: p-values must lie in [0, 1]");
  }
  BhResult out;
  out.adjusted.assign(m, 1.0);
  out.rejected.assign(m, false);
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double p = p_values[order[k]];
    // m p / k >= p mathematically; the max guards against rounding.
    const double v = std::max(p, p * static_cast<double>(m) / static_cast<double>(k + 1));
    running = std::min(running, v);
    out.adjusted[order[k]] = std::min(1.0, running);
  }
  std::size_t k_max = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (p_values[order[k]] <= alpha * static_cast<double>(k + 1) / static_cast<double>(m)) {
      k_max = k + 1;
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) out.rejected[order[k]] = true;
  return out;
}

std::vector<double> bonferroni(const std::vector<double>& p_values) {
  const double m = static_cast<double>(p_values.size());
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("bonferroni: p-values must lie in [0, 1]");
    out.push_back(std::min(1.0, m * p));
  }
  return out;
}

namespace {

// Minimum-cost assignment on a square cost matrix (row i -> column result[i]).
std::vector<Index> hungarian(const Matrix& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
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
      for (Index j = 0; j <= n; ++j) {
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
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<Index> result(n);
  for (Index j = 1; j <= n; ++j) result[p[j] - 1] = j - 1;
  return result;
}

}  // namespace

Alignment align(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw UsageError("align: shapes differ");
  }
  const Index r = truth.cols();
  // ||E P S - T||^2 = const - 2 sum_l |<e_perm(l), t_l>| at the optimal signs.
  const Matrix inner = truth.transpose() * estimate;  // (l, k) = <t_l, e_k>
  std::vector<Index> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  if (r <= 8) {
    std::vector<Index> cand = perm;
    double best = -1.0;
    do {
      double s = 0.0;
      for (Index l = 0; l < r; ++l) s += std::abs(inner(l, cand[l]));
      if (s > best + 1e-14 * std::max(1.0, best)) {
        best = s;
        perm = cand;
      }
    } while (std::next_permutation(cand.begin(), cand.end()));
  } else {
    perm = hungarian(-inner.cwiseAbs());
  }
  Alignment out;
  out.perm = perm;
  out.signs.resize(r);
  for (Index l = 0; l < r; ++l) out.signs[l] = inner(l, perm[l]) < 0.0 ? -1 : 1;
  out.aligned = apply_alignment(estimate, out);
  out.residual = (out.aligned - truth).norm();
  return out;
}

Matrix apply_permutation(const Matrix& M, const std::vector<Index>& perm) {
  Matrix out(M.rows(), static_cast<Index>(perm.size()));
  for (std::size_t l = 0; l < perm.size(); ++l) out.col(static_cast<Index>(l)) = M.col(perm[l]);
  return out;
}

Matrix apply_alignment(const Matrix& M, const Alignment& alignment) {
  Matrix out = apply_permutation(M, alignment.perm);
  for (std::size_t l = 0; l < alignment.signs.size(); ++l) {
    out.col(static_cast<Index>(l)) *= alignment.signs[l];
  }
  return out;
}

InferenceReport build_inference_report(const ResponseMatrix& data, const ParamPair& params,
                                       double level, double alpha, bool per_column,
                                       bool include_Z) {
  InferenceReport rep;
  rep.estimates = params;
  rep.cov_A = plugin_covariances_A(data, params);
  rep.wald_A = wald_intervals(params.A, rep.cov_A, level);
  if (include_Z) {
    rep.cov_Z = plugin_covariances_Z(data, params);
    rep.wald_Z = wald_intervals(params.Z, rep.cov_Z, level);
  }
  const Index q = params.q(), r = params.r();
  rep.p_bh.resize(q, r);
  rep.p_bonferroni.resize(q, r);
  rep.rejected_bh.resize(q, r);
  auto adjust_block = [&](const std::vector<std::pair<Index, Index>>& cells) {
    std::vector<double> p;
    p.reserve(cells.size());
    for (auto [j, l] : cells) p.push_back(rep.wald_A.p(j, l));
    const BhResult bh = bh_adjust(p, alpha);
    const std::vector<double> bf = bonferroni(p);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto [j, l] = cells[k];
      rep.p_bh(j, l) = bh.adjusted[k];
      rep.p_bonferroni(j, l) = bf[k];
      rep.rejected_bh(j, l) = bh.rejected[k] ? 1.0 : 0.0;
    }
  };
  if (per_column) {
    for (Index l = 0; l < r; ++l) {
      std::vector<std::pair<Index, Index>> cells;
      for (Index j = 0; j < q; ++j) cells.emplace_back(j, l);
      adjust_block(cells);
    }
  } else {
    std::vector<std::pair<Index, Index>> cells;
    for (Index j = 0; j < q; ++j) {
      for (Index l = 0; l < r; ++l) cells.emplace_back(j, l);
    }
    adjust_block(cells);
  }
  return rep;
}

}  // namespace folomin
