#include "folomin/sim.hpp"

#include "folomin/erm.hpp"
#include "folomin/inference.hpp"
#include "folomin/init.hpp"
#include "folomin/io.hpp"
#include "folomin/linalg.hpp"
#include "folomin/lqa.hpp"
#include "folomin/parallel.hpp"
#include "folomin/pipeline.hpp"
#include "folomin/vintage.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace folomin {

Index SimDesign::simple_per_dim() const {
  return static_cast<Index>(std::floor(simple_fraction * static_cast<double>(q) / static_cast<double>(r)));
}

void SimDesign::validate() const {
  if (n < 1 || q < 1 || r < 1) throw UsageError("design: n, q and r must be positive");
  if (n < r || q < r) throw UsageError("design: need n, q >= r");
  if (!(lambda_signal > 0.0)) throw UsageError("design: lambda must be positive");
  if (!(tau >= 0.0 && tau < 1.0)) throw UsageError("design: tau must lie in [0, 1)");
  if (!(simple_fraction > 0.0 && simple_fraction <= 1.0)) {
    throw UsageError("design: simple_fraction must lie in (0, 1]");
  }
  if (simple_per_dim() < 1) {
    throw UsageError("design: simple-row budget floor(simple_fraction * q / r) is zero");
  }
}

Matrix sigma_tau(Index r, double tau) {
  Matrix S(r, r);
  for (Index l = 0; l < r; ++l) {
    for (Index h = 0; h < r; ++h) S(l, h) = std::pow(tau, static_cast<double>(std::abs(l - h)));
  }
  return S;
}

double truncate_signal(double x, double a, double b) {
  const double m = std::abs(x);
  if (m < a) return 0.0;
  return std::copysign(std::min(m, b), x);
}

Matrix gen_A(const SimDesign& design, Rng& rng) {
  design.validate();
  const Index k = design.simple_per_dim();
  const Index q = design.q, r = design.r;
  Matrix A = Matrix::Zero(q, r);
  for (Index l = 0; l < r; ++l) {
    for (Index j = l * k; j < (l + 1) * k; ++j) {
      double v = rng.uniform(1.0, 2.0);
      if (design.random_simple_signs && rng.uniform() < 0.5) v = -v;
      A(j, l) = v;
    }
  }
  for (Index j = r * k; j < q; ++j) {
    for (Index l = 0; l < r; ++l) A(j, l) = truncate_signal(rng.normal(), design.lambda_signal, 2.5);
  }
  return A;
}

Matrix gen_Z(const SimDesign& design, Rng& rng) {
  design.validate();
  const Index n = design.n, r = design.r;
  Matrix X(n, r);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < r; ++l) X(i, l) = rng.normal();
  }
  const double nn = static_cast<double>(n);
  if (design.tau == 0.0) {
    const Matrix G = X.transpose() * X / nn;
    return X * linalg::inverse_sqrt_spd(G);
  }
  const Matrix L = Eigen::LLT<Matrix>(sigma_tau(r, design.tau)).matrixL();
  Matrix Z = X * L.transpose();
  for (Index l = 0; l < r; ++l) Z.col(l) *= std::sqrt(nn) / Z.col(l).norm();
  return Z;
}

Matrix varimax_bias(const Matrix& A_star, const Matrix& gram, bool kaiser) {
  const Matrix L = Eigen::LLT<Matrix>(linalg::symmetrize(gram)).matrixL();
  VintageConfig vc;
  vc.kaiser = kaiser;
  const VintageResult vm = varimax_rotate(A_star * L, vc);
  return align(vm.A_rot, A_star).aligned - A_star;
}

Matrix infeasible_debias_varimax(const Matrix& A_star, const Matrix& estimate, const Matrix& gram,
                                 bool kaiser) {
  return estimate - varimax_bias(A_star, gram, kaiser);
}

Matrix infeasible_debias_varimax(const Matrix& A_star, const Matrix& estimate) {
  return infeasible_debias_varimax(A_star, estimate, Matrix::Identity(A_star.cols(), A_star.cols()));
}

std::string to_string(SimMethod m) {
  switch (m) {
    case SimMethod::Oracle: return "oracle";
    case SimMethod::FolominSCAD: return "folomin_scad";
    case SimMethod::FolominMCP: return "folomin_mcp";
    case SimMethod::FolominTL1: return "folomin_tl1";
    case SimMethod::Varimax: return "varimax";
    case SimMethod::VarimaxDebiased: return "varimax_debiased";
    case SimMethod::Promax: return "promax";
  }
  return "?";
}

SimMethod parse_sim_method(const std::string& s) {
  for (SimMethod m : all_sim_methods()) {
    if (to_string(m) == s) return m;
  }
  throw UsageError("unknown method '" + s + "'");
}

std::vector<SimMethod> all_sim_methods() {
  return {SimMethod::Oracle,  SimMethod::FolominSCAD,     SimMethod::FolominMCP, SimMethod::FolominTL1,
          SimMethod::Varimax, SimMethod::VarimaxDebiased, SimMethod::Promax};
}

void SimOptions::validate() const {
  if (n_reps < 1) throw UsageError("reps must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (methods.empty()) throw UsageError("at least one method is required");
  if (!(lqa_R > 0.0)) throw UsageError("lqa R must be positive");
  if (!(lqa_eta > 0.0)) throw UsageError("lqa eta must be positive");
  if (lqa_T < 0) throw UsageError("lqa T must be nonnegative");
  if (promax_power < 2) throw UsageError("promax power must be >= 2");
  if (keep_rows < 0) throw UsageError("keep_rows must be nonnegative");
}

const MethodSummary* SimResult::find(SimMethod m) const {
  for (const auto& s : methods) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

void RunningStats::push(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

struct Truth {
  Matrix A;
  Matrix Z;
  Matrix gram;
  Matrix varimax_delta;  // empty unless needed
  double M = 0.0;
};

bool wants(const SimOptions& o, SimMethod m) {
  return std::find(o.methods.begin(), o.methods.end(), m) != o.methods.end();
}

Truth make_truth(const SimDesign& design, const SimOptions& options, Rng rng) {
  Truth t;
  Rng ra = rng.split(1), rz = rng.split(2);
  t.A = gen_A(design, ra);
  t.Z = gen_Z(design, rz);
  t.gram = t.Z.transpose() * t.Z / static_cast<double>(design.n);
  if (options.M > 0.0) {
    t.M = options.M;
  } else {
    // Noiseless orthonormal factorization: Z0 = sqrt(n) U, A0 = V D / sqrt(n).
    const Matrix L = Eigen::LLT<Matrix>(t.gram).matrixL();
    Matrix Z0 = t.Z * L.transpose().inverse();
    Matrix A0 = t.A * L;
    linalg::orthonormalize_pair(Z0, A0);
    t.M = 1.5 * std::max(linalg::two_to_inf(Z0), linalg::two_to_inf(A0));
  }
  if (wants(options, SimMethod::VarimaxDebiased)) t.varimax_delta = varimax_bias(t.A, t.gram, options.varimax_kaiser);
  return t;
}

struct MethodRep {
  bool ok = false;
  std::string error;
  Matrix err;      // aligned estimate - truth, q x r
  Matrix covered;  // 0/1
  double z_cov = std::numeric_limits<double>::quiet_NaN();
  double z_mse = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

Matrix se_matrix(const std::vector<RowCovariance>& rows, Index cols) {
  Matrix se(static_cast<Index>(rows.size()), cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (Index l = 0; l < cols; ++l) {
      const double v = rows[k].sandwich(l, l);
      if (!(v > 0.0)) throw NumericalError("degenerate variance");
      se(static_cast<Index>(k), l) = std::sqrt(v / rows[k].scale);
    }
  }
  return se;
}

// Covariances at `est`; aligned to the truth; optional shift subtracted from
// the aligned estimate; Z metrics when requested.
void evaluate(MethodRep& out, const ResponseMatrix& Y, const ParamPair& est, const Truth& t,
              double mult, bool with_Z, const Matrix* shift) {
  const Index r = est.r();
  const Matrix se = se_matrix(plugin_covariances_A(Y, est), r);
  const Alignment al = align(est.A, t.A);
  Matrix A_al = al.aligned;
  if (shift) A_al -= *shift;
  const Matrix se_al = apply_permutation(se, al.perm);
  out.err = A_al - t.A;
  out.covered = (out.err.array().abs() <= mult * se_al.array()).cast<double>();
  if (with_Z) {
    const Matrix seZ = apply_permutation(se_matrix(plugin_covariances_Z(Y, est), r), al.perm);
    const Matrix errZ = apply_alignment(est.Z, al) - t.Z;
    out.z_cov = (errZ.array().abs() <= mult * seZ.array()).cast<double>().mean();
    out.z_mse = static_cast<double>(est.q()) * errZ.array().square().mean();
  }
  out.ok = true;
}

template <class F>
void timed(MethodRep& rep, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    f();
  } catch (const Error& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FoldedLoss loss_for(SimMethod m, double gamma) {
  switch (m) {
    case SimMethod::FolominSCAD: return FoldedLoss::scad(gamma);
    case SimMethod::FolominTL1: return FoldedLoss::truncated_l1(gamma);
    default: return FoldedLoss::mcp(gamma);
  }
}

std::vector<MethodRep> run_one(const SimDesign& design, const SimOptions& options, const Truth& t,
                               Rng rng) {
  const std::size_t nm = options.methods.size();
  std::vector<MethodRep> out(nm);
  const double mult = normal_quantile(0.5 * (1.0 + options.level));
  Rng ry = rng.split(3);
  const ResponseMatrix Y = sample_responses(design.family, t.Z * t.A.transpose(), ry);

  bool need_erm = false;
  for (SimMethod m : options.methods) need_erm |= m != SimMethod::Oracle;

  std::optional<ParamPair> erm;
  std::string erm_error;
  if (need_erm) {
    try {
      FitConfig fc;
      fc.M = t.M;
      fc.max_iters = options.erm_max_iters;
      fc.tol = options.erm_tol;
      erm = erm_fit(Y, design.r, fc).params;
    } catch (const Error& e) {
      erm_error = std::string("erm: ") + e.what();
    }
  }
  const RotationMode mode =
      options.mode ? *options.mode : (design.tau == 0.0 ? RotationMode::Orthogonal : RotationMode::Oblique);

  for (std::size_t k = 0; k < nm; ++k) {
    const SimMethod m = options.methods[k];
    MethodRep& rep = out[k];
    if (m != SimMethod::Oracle && !erm) {
      rep.error = erm_error;
      continue;
    }
    timed(rep, [&] {
      switch (m) {
        case SimMethod::Oracle: {
          const Matrix A_or = oracle_fit_A(Y, t.Z);
          const ParamPair pa{t.Z, A_or};
          const Matrix se = se_matrix(plugin_covariances_A(Y, pa), design.r);
          rep.err = A_or - t.A;
          rep.covered = (rep.err.array().abs() <= mult * se.array()).cast<double>();
          const Matrix Z_or = oracle_fit_Z(Y, t.A);
          const ParamPair pz{Z_or, t.A};
          const Matrix seZ = se_matrix(plugin_covariances_Z(Y, pz), design.r);
          const Matrix errZ = Z_or - t.Z;
          rep.z_cov = (errZ.array().abs() <= mult * seZ.array()).cast<double>().mean();
          rep.z_mse = static_cast<double>(design.q) * errZ.array().square().mean();
          rep.ok = true;
          break;
        }
        case SimMethod::FolominSCAD:
        case SimMethod::FolominMCP:
        case SimMethod::FolominTL1: {
          FolominOptions fo;
          fo.loss = loss_for(m, 1.0).kind();
          fo.gamma = options.gamma;
          fo.R = options.lqa_R;
          fo.eta = options.lqa_eta;
          fo.T = options.lqa_T;
          fo.mode = mode;
          fo.lambda_gen = design.lambda_signal;
          const FolominFit res = folomin_rotate(Y, *erm, fo);
          evaluate(rep, Y, res.params, t, mult, true, nullptr);
          break;
        }
        case SimMethod::Varimax:
        case SimMethod::VarimaxDebiased: {
          VintageConfig vc;
          vc.restarts = options.varimax_restarts;
          vc.kaiser = options.varimax_kaiser;
          const VintageResult vm = varimax_rotate(erm->A, vc);
          const ParamPair est{erm->Z * vm.G, vm.A_rot};
          evaluate(rep, Y, est, t, mult, false,
                   m == SimMethod::VarimaxDebiased ? &t.varimax_delta : nullptr);
          break;
        }
        case SimMethod::Promax: {
          VintageConfig vc;
          vc.restarts = options.varimax_restarts;
          const VintageResult pm = promax_rotate(erm->A, options.promax_power, vc);
          const ParamPair est{erm->Z * pm.G.transpose().inverse(), pm.A_rot};
          evaluate(rep, Y, est, t, mult, false, nullptr);
          break;
        }
      }
    });
  }
  return out;
}

}  // namespace

SimResult run_replications(const SimDesign& design, const SimOptions& options) {
  design.validate();
  options.validate();
  const Rng master(design.seed);
  const std::size_t reps = static_cast<std::size_t>(options.n_reps);

  Truth fixed;
  if (!design.regenerate_params) fixed = make_truth(design, options, master.split(0));

  std::vector<std::vector<MethodRep>> results(reps);
  std::vector<Matrix> truths(design.regenerate_params ? reps : 0);
  parallel_for(reps, [&](std::size_t k) {
    const Rng rep_rng = master.split(k + 1);
    if (design.regenerate_params) {
      const Truth t = make_truth(design, options, rep_rng.split(0));
      truths[k] = t.A;
      results[k] = run_one(design, options, t, rep_rng);
    } else {
      results[k] = run_one(design, options, fixed, rep_rng);
    }
  });

  SimResult out;
  out.design = design;
  out.options = options;
  out.rng_name = std::string(Rng::kName);
  out.A_star = design.regenerate_params ? truths.front() : fixed.A;

  const Index q = design.q, r = design.r;
  const Index keep = std::min(options.keep_rows, q);
  const double n = static_cast<double>(design.n);
  for (std::size_t mi = 0; mi < options.methods.size(); ++mi) {
    MethodSummary s;
    s.method = options.methods[mi];
    std::vector<std::vector<double>> errs(static_cast<std::size_t>(q * r));
    Matrix cov_sum = Matrix::Zero(q, r);
    RunningStats zc, zm;
    for (std::size_t k = 0; k < reps; ++k) {
      const MethodRep& rep = results[k][mi];
      s.seconds += rep.seconds;
      if (!rep.ok) {
        ++s.failures;
        s.failure_messages.push_back("rep " + std::to_string(k + 1) + ": " + rep.error);
        s.kept_errors.emplace_back();
        s.kept_covered.emplace_back();
        continue;
      }
      ++s.successes;
      for (Index l = 0; l < r; ++l) {
        for (Index j = 0; j < q; ++j) errs[static_cast<std::size_t>(l * q + j)].push_back(rep.err(j, l));
      }
      cov_sum += rep.covered;
      if (std::isfinite(rep.z_cov)) {
        zc.push(rep.z_cov);
        zm.push(rep.z_mse);
      }
      s.kept_errors.push_back(rep.err.topRows(keep));
      s.kept_covered.push_back(rep.covered.topRows(keep));
    }
    EntryStats& e = s.A;
    for (Matrix* M : {&e.bias, &e.sd, &e.mse_scaled, &e.coverage, &e.q05, &e.q50, &e.q95}) {
      M->setConstant(q, r, std::numeric_limits<double>::quiet_NaN());
    }
    if (s.successes > 0) {
      for (Index l = 0; l < r; ++l) {
        for (Index j = 0; j < q; ++j) {
          const auto& v = errs[static_cast<std::size_t>(l * q + j)];
          RunningStats rs;
          double sq = 0.0;
          for (double x : v) {
            rs.push(x);
            sq += x * x;
          }
          e.bias(j, l) = rs.mean();
          e.sd(j, l) = std::sqrt(rs.variance());
          e.mse_scaled(j, l) = n * sq / static_cast<double>(v.size());
          e.q05(j, l) = quantile(v, 0.05);
          e.q50(j, l) = quantile(v, 0.50);
          e.q95(j, l) = quantile(v, 0.95);
        }
      }
      e.coverage = cov_sum / static_cast<double>(s.successes);
      s.mean_coverage_A = e.coverage.mean();
      s.mean_scaled_mse_A = e.mse_scaled.mean();
      s.mean_abs_bias_A = e.bias.cwiseAbs().mean();
    } else {
      s.mean_coverage_A = s.mean_scaled_mse_A = s.mean_abs_bias_A = std::numeric_limits<double>::quiet_NaN();
    }
    s.mean_coverage_Z = zc.count() ? zc.mean() : std::numeric_limits<double>::quiet_NaN();
    s.mean_scaled_mse_Z = zm.count() ? zm.mean() : std::numeric_limits<double>::quiet_NaN();
    out.methods.push_back(std::move(s));
  }
  return out;
}

void write_replications_csv(const SimResult& result, std::ostream& out) {
  out << "method,matrix,rep,row,col,metric,value\n";
  auto line = [&](const std::string& method, const char* matrix, const std::string& rep, Index row,
                  Index col, const char* metric, double v) {
    out << method << ',' << matrix << ',' << rep << ',' << row << ',' << col << ',' << metric << ','
        << io::format_double(v) << '\n';
  };
  for (const MethodSummary& s : result.methods) {
    const std::string name = to_string(s.method);
    const EntryStats& e = s.A;
    const std::pair<const char*, const Matrix*> metrics[] = {
        {"bias", &e.bias}, {"sd", &e.sd},   {"mse_scaled", &e.mse_scaled}, {"coverage", &e.coverage},
        {"q05", &e.q05},   {"q50", &e.q50}, {"q95", &e.q95}};
    for (Index j = 0; j < e.bias.rows(); ++j) {
      for (Index l = 0; l < e.bias.cols(); ++l) {
        for (const auto& [metric, M] : metrics) line(name, "A", "all", j + 1, l + 1, metric, (*M)(j, l));
      }
    }
    if (std::isfinite(s.mean_coverage_Z)) {
      line(name, "Z", "all", 0, 0, "coverage", s.mean_coverage_Z);
      line(name, "Z", "all", 0, 0, "mse_scaled", s.mean_scaled_mse_Z);
    }
    for (std::size_t k = 0; k < s.kept_errors.size(); ++k) {
      const Matrix& E = s.kept_errors[k];
      const Matrix& C = s.kept_covered[k];
      for (Index j = 0; j < E.rows(); ++j) {
        for (Index l = 0; l < E.cols(); ++l) {
          line(name, "A", std::to_string(k + 1), j + 1, l + 1, "error", E(j, l));
          line(name, "A", std::to_string(k + 1), j + 1, l + 1, "covered", C(j, l));
        }
      }
    }
  }
}

namespace {

nlohmann::json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string summary_json(const SimResult& result, double wall_seconds) {
  using nlohmann::json;
  const SimDesign& d = result.design;
  const SimOptions& o = result.options;
  json j;
  j["design"] = {{"n", d.n},
                 {"q", d.q},
                 {"r", d.r},
                 {"lambda", d.lambda_signal},
                 {"tau", d.tau},
                 {"family", d.family.name()},
                 {"variance", d.family.variance()},
                 {"simple_fraction", d.simple_fraction},
                 {"seed", d.seed},
                 {"random_simple_signs", d.random_simple_signs},
                 {"regenerate_params", d.regenerate_params}};
  json methods = json::array();
  for (SimMethod m : o.methods) methods.push_back(to_string(m));
  j["options"] = {{"methods", methods},
                  {"reps", o.n_reps},
                  {"level", o.level},
                  {"M", o.M},
                  {"lqa_R", o.lqa_R},
                  {"lqa_eta", o.lqa_eta},
                  {"lqa_T", o.lqa_T},
                  {"gamma", o.gamma},
                  {"promax_power", o.promax_power},
                  {"varimax_restarts", o.varimax_restarts},
                  {"varimax_kaiser", o.varimax_kaiser}};
  json res = json::object();
  for (const MethodSummary& s : result.methods) {
    res[to_string(s.method)] = {{"successes", s.successes},
                                {"failures", s.failures},
                                {"failure_messages", s.failure_messages},
                                {"mean_coverage_A", num(s.mean_coverage_A)},
                                {"mean_scaled_mse_A", num(s.mean_scaled_mse_A)},
                                {"mean_abs_bias_A", num(s.mean_abs_bias_A)},
                                {"mean_coverage_Z", num(s.mean_coverage_Z)},
                                {"mean_scaled_mse_Z", num(s.mean_scaled_mse_Z)},
                                {"seconds", s.seconds}};
  }
  j["methods"] = res;
  j["rng"] = result.rng_name;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace folomin
