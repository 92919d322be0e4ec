#include "folomin/criteria.hpp"
#include "folomin/erm.hpp"
#include "folomin/inference.hpp"
#include "folomin/pipeline.hpp"
#include "folomin/sim.hpp"
#include "folomin/vintage.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace folomin;

namespace {

ResponseMatrix responses(const Matrix& Y, const std::string& family, double variance) {
  return ResponseMatrix(Y, ResponseFamily::parse(family, variance));
}

ParamPair pair(const Matrix& Z, const Matrix& A) {
  if (Z.cols() != A.cols()) throw UsageError("Z and A must have the same number of columns");
  return ParamPair{Z, A};
}

py::dict fit_dict(const FolominFit& f) {
  py::dict d;
  d["Z"] = f.params.Z;
  d["A"] = f.params.A;
  d["rotation"] = f.rotation;
  d["gamma"] = f.gamma;
  d["loss"] = f.loss.name();
  d["delta_prime"] = f.delta_prime;
  d["criterion"] = criterion_folomin(f.params.A, f.loss);
  return d;
}

FolominOptions folomin_options(const std::string& loss, double gamma, const std::string& mode,
                               int steps) {
  FolominOptions o;
  o.loss = FoldedLoss::parse(loss, 1.0).kind();
  o.gamma = gamma;
  o.mode = parse_rotation_mode(mode);
  o.T = steps;
  return o;
}

py::dict vintage_dict(const VintageResult& v) {
  py::dict d;
  d["G"] = v.G;
  d["A"] = v.A_rot;
  d["factor_correlation"] = v.factor_correlation;
  d["criterion"] = v.criterion;
  d["converged"] = v.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Folded-loss rotation for latent-variable models: fitting, rotation and inference.";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "folded_loss",
      [](const std::string& loss, double gamma, const Vector& t) {
        const FoldedLoss f = FoldedLoss::parse(loss, gamma);
        Vector out(t.size());
        for (Index i = 0; i < t.size(); ++i) out(i) = f.eval(t(i));
        return out;
      },
      py::arg("loss"), py::arg("gamma"), py::arg("t"),
      "Elementwise rho_gamma(t) for loss 'mcp', 'scad' or 'tl1'.");

  m.def(
      "criterion_folomin",
      [](const Matrix& A, const std::string& loss, double gamma) {
        return criterion_folomin(A, FoldedLoss::parse(loss, gamma));
      },
      py::arg("A"), py::arg("loss") = "mcp", py::arg("gamma") = 0.1);
  m.def("criterion_varimax", &criterion_varimax, py::arg("A"));

  m.def(
      "erm_fit",
      [](const Matrix& Y, const std::string& family, Index r, double M, int max_iters, double tol,
         double variance) {
        FitConfig c;
        c.M = M;
        c.max_iters = max_iters;
        c.tol = tol;
        FitResult f;
        {
          py::gil_scoped_release release;
          f = erm_fit(responses(Y, family, variance), r, c);
        }
        py::dict d;
        d["Z"] = f.params.Z;
        d["A"] = f.params.A;
        d["iterations"] = f.iterations;
        d["converged"] = f.status == FitStatus::Converged;
        d["objective"] = f.objective;
        d["M"] = f.M;
        return d;
      },
      py::arg("Y"), py::arg("family"), py::arg("r"), py::arg("M") = 0.0, py::arg("max_iters") = 1000,
      py::arg("tol") = 1e-9, py::arg("variance") = 1.0,
      "Constrained joint fit: returns dict(Z, A, iterations, converged, objective, M).");

  m.def(
      "rotate",
      [](const Matrix& Y, const std::string& family, const Matrix& Z, const Matrix& A,
         const std::string& loss, double gamma, const std::string& mode, int steps, double variance) {
        const FolominOptions o = folomin_options(loss, gamma, mode, steps);
        const ResponseMatrix data = responses(Y, family, variance);
        return fit_dict(folomin_rotate(data, pair(Z, A), o));
      },
      py::arg("Y"), py::arg("family"), py::arg("Z"), py::arg("A"), py::arg("loss") = "mcp",
      py::arg("gamma") = 0.0, py::arg("mode") = "oblique", py::arg("steps") = 3,
      py::arg("variance") = 1.0,
      "Initial rotation and LQA refinement of a fitted pair (Z, A).");

  m.def(
      "fit",
      [](const Matrix& Y, const std::string& family, Index r, const std::string& loss, double gamma,
         const std::string& mode, int steps, double variance) {
        const ResponseMatrix data = responses(Y, family, variance);
        const FolominOptions o = folomin_options(loss, gamma, mode, steps);
        const FitResult erm = erm_fit(data, r);
        return fit_dict(folomin_rotate(data, erm.params, o));
      },
      py::arg("Y"), py::arg("family"), py::arg("r"), py::arg("loss") = "mcp", py::arg("gamma") = 0.0,
      py::arg("mode") = "oblique", py::arg("steps") = 3, py::arg("variance") = 1.0,
      "erm_fit followed by rotate.");

  m.def(
      "varimax",
      [](const Matrix& A, bool kaiser, int restarts) {
        VintageConfig c;
        c.kaiser = kaiser;
        c.restarts = restarts;
        return vintage_dict(varimax_rotate(A, c));
      },
      py::arg("A"), py::arg("kaiser") = true, py::arg("restarts") = 10);
  m.def(
      "promax", [](const Matrix& A, int power) { return vintage_dict(promax_rotate(A, power)); },
      py::arg("A"), py::arg("power") = 4);

  m.def(
      "infer",
      [](const Matrix& Y, const std::string& family, const Matrix& Z, const Matrix& A, double level,
         double alpha, bool per_column, double variance) {
        const InferenceReport rep =
            build_inference_report(responses(Y, family, variance), pair(Z, A), level, alpha, per_column, false);
        py::dict d;
        d["estimate"] = rep.wald_A.estimate;
        d["se"] = rep.wald_A.se;
        d["z"] = rep.wald_A.z;
        d["p"] = rep.wald_A.p;
        d["p_bh"] = rep.p_bh;
        d["p_bonferroni"] = rep.p_bonferroni;
        d["lower"] = rep.wald_A.lower;
        d["upper"] = rep.wald_A.upper;
        return d;
      },
      py::arg("Y"), py::arg("family"), py::arg("Z"), py::arg("A"), py::arg("level") = 0.95,
      py::arg("alpha") = 0.05, py::arg("per_column") = true, py::arg("variance") = 1.0,
      "Plug-in Wald inference for every entry of A.");

  m.def(
      "bh_adjust",
      [](const std::vector<double>& p, double alpha) {
        const BhResult r = bh_adjust(p, alpha);
        return py::make_tuple(r.adjusted, r.rejected);
      },
      py::arg("p"), py::arg("alpha") = 0.05, "Returns (adjusted p-values, rejections).");
  m.def("bonferroni", &bonferroni, py::arg("p"));

  m.def(
      "align",
      [](const Matrix& estimate, const Matrix& truth) {
        const Alignment a = align(estimate, truth);
        return py::make_tuple(a.aligned, a.perm, a.signs);
      },
      py::arg("estimate"), py::arg("truth"), "Signed column permutation closest to truth.");

  m.def(
      "simulate",
      [](Index n, Index q, Index r, double tau, double lambda, int reps, std::uint64_t seed,
         const std::vector<std::string>& methods, const std::string& family) {
        SimDesign d;
        d.n = n;
        d.q = q;
        d.r = r;
        d.tau = tau;
        d.lambda_signal = lambda;
        d.seed = seed;
        d.family = ResponseFamily::parse(family);
        SimOptions o;
        o.n_reps = reps;
        if (!methods.empty()) {
          o.methods.clear();
          for (const auto& s : methods) o.methods.push_back(parse_sim_method(s));
        }
        SimResult res;
        {
          py::gil_scoped_release release;
          res = run_replications(d, o);
        }
        py::dict out;
        for (const MethodSummary& s : res.methods) {
          py::dict e;
          e["coverage"] = s.mean_coverage_A;
          e["scaled_mse"] = s.mean_scaled_mse_A;
          e["mean_abs_bias"] = s.mean_abs_bias_A;
          e["successes"] = s.successes;
          e["failures"] = s.failures;
          e["coverage_per_entry"] = s.A.coverage;
          out[py::str(to_string(s.method))] = e;
        }
        return out;
      },
      py::arg("n") = 500, py::arg("q") = 500, py::arg("r") = 3, py::arg("tau") = 0.5,
      py::arg("lam") = 0.2, py::arg("reps") = 10, py::arg("seed") = 7,
      py::arg("methods") = std::vector<std::string>{}, py::arg("family") = "bernoulli",
      "Monte Carlo replications; returns per-method summaries.");
}
