#include "folomin/init.hpp"

#include "folomin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace folomin {

void InitConfig::validate() const {
  if (!(delta > 0.0)) throw UsageError("init: delta must be positive");
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) {
    throw UsageError("init: delta_prime must lie in (0, 1)");
  }
  if (min_set_size < 1) throw UsageError("init: min_set_size must be positive");
}

InitConfig default_init_config(const ParamPair& params, std::optional<double> lambda_gen) {
  InitConfig c;
  if (lambda_gen) {
    const Matrix gram = params.Z.transpose() * params.Z / static_cast<double>(params.n());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    c.delta = 0.05 * (*lambda_gen) * (*lambda_gen) * es.eigenvalues()(0);
  }
  return c;
}

namespace {

// Gram of the fitted columns Z a_j, scaled by n^{-1}: K = A S A'.
Matrix column_gram(const ParamPair& p) {
  const Matrix S = p.Z.transpose() * p.Z / static_cast<double>(p.n());
  return p.A * S * p.A.transpose();
}

double similarity_from_gram(const Matrix& K, Index j1, Index j2, double delta) {
  const double a = std::sqrt(std::max(K(j1, j1), 0.0));
  const double b = std::sqrt(std::max(K(j2, j2), 0.0));
  if (!(a * b > delta)) return 0.0;
  return std::clamp(K(j1, j2) / (a * b), -1.0, 1.0);
}

}  // namespace

double similarity(const ParamPair& params, Index j1, Index j2, double delta) {
  const Index q = params.q();
  if (j1 < 0 || j1 >= q || j2 < 0 || j2 >= q) throw UsageError("similarity: index out of range");
  const Matrix S = params.Z.transpose() * params.Z / static_cast<double>(params.n());
  const Vector a1 = params.A.row(j1).transpose();
  const Vector a2 = params.A.row(j2).transpose();
  const double n11 = a1.dot(S * a1), n22 = a2.dot(S * a2), n12 = a1.dot(S * a2);
  const double a = std::sqrt(std::max(n11, 0.0)), b = std::sqrt(std::max(n22, 0.0));
  if (!(a * b > delta)) return 0.0;
  return std::clamp(n12 / (a * b), -1.0, 1.0);
}

SelectedSets select_disjoint_sets(const ParamPair& params, const InitConfig& config,
                                  Index max_sets) {
  config.validate();
  const Index q = params.q();
  SelectedSets out;
  const Matrix K = column_gram(params);
  const double thresh = 1.0 - config.delta_prime;

  std::vector<IndexSet> cand(static_cast<std::size_t>(q));
  for (Index j = 0; j < q; ++j) {
    for (Index k = 0; k < q; ++k) {
      if (similarity_from_gram(K, j, k, config.delta) > thresh) {
        cand[static_cast<std::size_t>(j)].push_back(k);
        if (k != j) ++out.summary.pairs_above_threshold;
      }
    }
    out.summary.candidate_sizes.push_back(static_cast<Index>(cand[static_cast<std::size_t>(j)].size()));
  }

  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return cand[static_cast<std::size_t>(a)].size() > cand[static_cast<std::size_t>(b)].size();
  });
  std::vector<char> taken(static_cast<std::size_t>(q), 0);
  for (Index j : order) {
    if (static_cast<Index>(out.sets.size()) == max_sets) break;
    const IndexSet& s = cand[static_cast<std::size_t>(j)];
    if (static_cast<Index>(s.size()) < config.min_set_size) break;  // sorted: the rest are smaller
    const bool disjoint =
        std::none_of(s.begin(), s.end(), [&](Index k) { return taken[static_cast<std::size_t>(k)] != 0; });
    if (!disjoint) continue;
    for (Index k : s) taken[static_cast<std::size_t>(k)] = 1;
    out.sets.push_back(s);
    out.summary.anchors.push_back(j);
  }
  return out;
}

InitResult init_from_sets(const ParamPair& params, const std::vector<IndexSet>& sets) {
  const Index r = params.r();
  const Index n = params.n();
  if (static_cast<Index>(sets.size()) != r) throw UsageError("init_from_sets: need exactly r sets");
  InitResult out;
  out.selected_sets = sets;

  Matrix Gt(r, r);
  for (Index k = 0; k < r; ++k) {
    IndexSet others;
    for (Index l = 0; l < r; ++l) {
      if (l == k) continue;
      const IndexSet& s = sets[static_cast<std::size_t>(l)];
      others.insert(others.end(), s.begin(), s.end());
    }
    Vector v;
    if (others.empty()) {
      v = Vector::Unit(r, 0);
    } else {
      Matrix sub(static_cast<Index>(others.size()), r);
      for (std::size_t t = 0; t < others.size(); ++t) sub.row(static_cast<Index>(t)) = params.A.row(others[t]);
      Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
      v = svd.matrixV().col(r - 1);
    }
    double colsum = 0.0;
    for (Index j : sets[static_cast<std::size_t>(k)]) colsum += params.A.row(j).dot(v);
    if (colsum < 0.0) v = -v;
    Gt.col(k) = v;
  }

  const double cond = linalg::condition_number(Gt);
  out.similarity_used.rotation_condition = cond;
  if (!(cond <= 1e8)) {
    throw NumericalError("collinear axes: initial rotation is numerically singular");
  }

  const Matrix S = params.Z.transpose() * params.Z / static_cast<double>(n);
  const Matrix Gt_inv = Gt.inverse();
  const Vector d = (Gt_inv * S * Gt_inv.transpose()).diagonal();
  const Matrix G0 = d.cwiseSqrt().cwiseInverse().asDiagonal() * Gt_inv;

  out.rotation = G0;
  out.params.Z = params.Z * G0.transpose();
  // G0^{-1} = G~ diag(d)^{1/2}
  out.params.A = params.A * Gt * d.cwiseSqrt().asDiagonal();
  return out;
}

InitResult init_rotation(const ParamPair& params, const InitConfig& config) {
  const Index r = params.r();
  SelectedSets sel = select_disjoint_sets(params, config, r);
  if (static_cast<Index>(sel.sets.size()) < r) {
    std::ostringstream os;
    os << "insufficient simple structure: found " << sel.sets.size()
       << " disjoint candidate sets of size >= " << config.min_set_size << ", need " << r;
    throw NumericalError(os.str());
  }
  InitResult out = init_from_sets(params, sel.sets);
  const double cond = out.similarity_used.rotation_condition;
  out.similarity_used = std::move(sel.summary);
  out.similarity_used.rotation_condition = cond;
  return out;
}

}  // namespace folomin
