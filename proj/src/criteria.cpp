#include "folomin/criteria.hpp"

#include "folomin/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace folomin {

FoldedLoss::FoldedLoss(LossKind kind, double gamma, double a)
    : kind_(kind), gamma_(gamma), a_(a) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw UsageError("folded loss: gamma must be positive");
  }
}

FoldedLoss FoldedLoss::scad(double gamma, double a) {
  if (!(a > 2.0)) throw UsageError("SCAD requires a > 2");
  return FoldedLoss(LossKind::SCAD, gamma, a);
}

FoldedLoss FoldedLoss::mcp(double gamma, double a) {
  if (!(a > 1.0)) throw UsageError("MCP requires a > 1");
  return FoldedLoss(LossKind::MCP, gamma, a);
}

FoldedLoss FoldedLoss::truncated_l1(double gamma) {
  return FoldedLoss(LossKind::TruncatedL1, gamma, 1.0);
}

FoldedLoss FoldedLoss::parse(const std::string& name, double gamma) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "scad") return scad(gamma);
  if (s == "mcp") return mcp(gamma);
  if (s == "tl1" || s == "truncated_l1") return truncated_l1(gamma);
  throw UsageError("unknown folded loss '" + name + "' (expected scad, mcp or tl1)");
}

std::string FoldedLoss::name() const {
  switch (kind_) {
    case LossKind::SCAD: return "scad";
    case LossKind::MCP: return "mcp";
    case LossKind::TruncatedL1: return "tl1";
  }
  return "unknown";
}

double FoldedLoss::a1() const {
  switch (kind_) {
    case LossKind::SCAD: return a_;
    case LossKind::MCP: return a_;
    case LossKind::TruncatedL1: return 0.5;
  }
  return 0.0;
}

double FoldedLoss::a2() const {
  switch (kind_) {
    case LossKind::SCAD: return 1.0 / ((a_ - 1.0) * gamma_);
    case LossKind::MCP: return 1.0 / (a_ * gamma_);
    case LossKind::TruncatedL1: return 0.0;
  }
  return 0.0;
}

double FoldedLoss::a3() const {
  return kind_ == LossKind::TruncatedL1 ? 1.0 : a_;
}

double FoldedLoss::eval(double t) const {
  const double x = std::abs(t);
  const double g = gamma_;
  switch (kind_) {
    case LossKind::MCP:
      return x <= a_ * g ? g * x - x * x / (2.0 * a_) : 0.5 * a_ * g * g;
    case LossKind::SCAD:
      if (x <= g) return g * x;
      if (x <= a_ * g) return (2.0 * a_ * g * x - x * x - g * g) / (2.0 * (a_ - 1.0));
      return 0.5 * (a_ + 1.0) * g * g;
    case LossKind::TruncatedL1:
      return g * std::min(x, g);
  }
  return 0.0;
}

double FoldedLoss::d1(double t) const {
  if (!(t > 0.0)) throw UsageError("folded_d1 requires t > 0");
  const double g = gamma_;
  switch (kind_) {
    case LossKind::MCP:
      return t < a_ * g ? g - t / a_ : 0.0;
    case LossKind::SCAD:
      if (t <= g) return g;
      return std::max(a_ * g - t, 0.0) / (a_ - 1.0);
    case LossKind::TruncatedL1:
      return t < g ? g : 0.0;
  }
  return 0.0;
}

double folded_eval(const FoldedLoss& loss, double t) { return loss.eval(t); }
double folded_d1(const FoldedLoss& loss, double t) { return loss.d1(t); }
double folded_d1_at_zero_plus(const FoldedLoss& loss) { return loss.d1_at_zero_plus(); }

double criterion_folomin(const Matrix& A, const FoldedLoss& loss) {
  double s = 0.0;
  for (Index l = 0; l < A.cols(); ++l) {
    for (Index j = 0; j < A.rows(); ++j) s += loss.eval(A(j, l));
  }
  return s;
}

double criterion_varimax(const Matrix& A) {
  const double q = static_cast<double>(A.rows());
  if (A.rows() < 1) throw UsageError("criterion_varimax: need q >= 1");
  double total = 0.0;
  for (Index l = 0; l < A.cols(); ++l) {
    const auto sq = A.col(l).array().square();
    const double m = sq.sum() / q;
    total += sq.square().sum() - q * m * m;
  }
  return total / q;
}

Matrix criterion_varimax_gradient(const Matrix& A) {
  const double q = static_cast<double>(A.rows());
  Matrix g(A.rows(), A.cols());
  for (Index l = 0; l < A.cols(); ++l) {
    const double m = A.col(l).squaredNorm() / q;
    g.col(l) = (4.0 / q) * (A.col(l).array().cube() - m * A.col(l).array()).matrix();
  }
  return g;
}

std::string to_string(RotationMode mode) {
  return mode == RotationMode::Oblique ? "oblique" : "orthogonal";
}

RotationMode parse_rotation_mode(const std::string& s) {
  if (s == "oblique") return RotationMode::Oblique;
  if (s == "orthogonal") return RotationMode::Orthogonal;
  throw UsageError("unknown rotation mode '" + s + "' (expected oblique or orthogonal)");
}

FeasibleSet FeasibleSet::around_identity(double radius, const Matrix& gram,
                                         RotationMode mode) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw UsageError("feasible set: gram must be square and nonempty");
  }
  FeasibleSet s;
  s.center = Matrix::Identity(gram.rows(), gram.cols());
  s.radius = radius;
  s.gram = mode == RotationMode::Orthogonal ? Matrix::Identity(gram.rows(), gram.cols()) : gram;
  s.mode = mode;
  return s;
}

Matrix feasible_project(const FeasibleSet& set, const Matrix& G) {
  if (set.mode == RotationMode::Orthogonal) return linalg::polar_factor(G);
  const Vector d = (G * set.gram * G.transpose()).diagonal();
  for (Index k = 0; k < d.size(); ++k) {
    if (!(d(k) > 1e-300)) {
      throw NumericalError("degenerate rotation: zero row in feasible_project");
    }
  }
  return d.cwiseSqrt().cwiseInverse().asDiagonal() * G;
}

Matrix sample_feasible(const FeasibleSet& set, Rng& rng) {
  if (set.radius < 0.0) throw UsageError("sample_feasible: radius must be >= 0");
  const Index r = set.dim();
  if (set.radius == 0.0) return feasible_project(set, set.center);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrix E(r, r);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < r; ++j) E(i, j) = rng.normal();
    }
    const double scale = set.radius * rng.uniform() / linalg::operator_norm(E);
    Matrix G = feasible_project(set, set.center + scale * E);
    if (linalg::operator_norm(G - set.center) <= 2.0 * set.radius) return G;
  }
  throw NumericalError("sample_feasible: could not draw a member of the set");
}

}  // namespace folomin
