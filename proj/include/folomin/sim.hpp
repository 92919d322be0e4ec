#pragma once

#include "folomin/criteria.hpp"
#include "folomin/model.hpp"
#include "folomin/rng.hpp"
#include "folomin/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace folomin {

/// Data-generating design: A* with r blocks of simple rows and truncated
/// Gaussian remaining entries, Z* ~ N(0, Sigma_tau) rescaled to unit
/// empirical variances, Y ~ P_{Z* A*'}.
struct SimDesign {
  Index n = 500;
  Index q = 500;
  Index r = 3;
  double lambda_signal = 0.2;
  double tau = 0.5;
  ResponseFamily family = ResponseFamily::bernoulli();
  double simple_fraction = 0.1;
  std::uint64_t seed = 7;
  /// Random signs on the Unif(1, 2) simple-row entries.
  bool random_simple_signs = false;
  /// Draw fresh (Z*, A*) in every replication instead of once per run.
  bool regenerate_params = false;

  Index simple_per_dim() const;
  void validate() const;
};

/// Sigma_tau with entries tau^{|l - h|}.
Matrix sigma_tau(Index r, double tau);

/// Trun_{(a, b)}(x) = sgn(x) min(|x|, b) 1{|x| >= a}.
double truncate_signal(double x, double a, double b);

Matrix gen_A(const SimDesign& design, Rng& rng);
Matrix gen_Z(const SimDesign& design, Rng& rng);

/// Data-independent varimax offset. With S = gram of Z* = L L', the varimax
/// target of an orthonormal fit is varimax(A* L); its aligned difference from
/// A* is subtracted from the (aligned) estimate. Pass gram = I for
/// uncorrelated designs.
Matrix varimax_bias(const Matrix& A_star, const Matrix& gram, bool kaiser = true);
Matrix infeasible_debias_varimax(const Matrix& A_star, const Matrix& estimate,
                                 const Matrix& gram, bool kaiser = true);
Matrix infeasible_debias_varimax(const Matrix& A_star, const Matrix& estimate);

enum class SimMethod { Oracle, FolominSCAD, FolominMCP, FolominTL1, Varimax, VarimaxDebiased, Promax };

std::string to_string(SimMethod m);
SimMethod parse_sim_method(const std::string& s);
std::vector<SimMethod> all_sim_methods();

struct SimOptions {
  std::vector<SimMethod> methods = all_sim_methods();
  int n_reps = 100;
  double level = 0.95;
  /// ERM row cap; <= 0 uses 1.5 x the largest row norm of the noiseless
  /// orthonormal factorization of Z* A*'.
  double M = 0.0;
  int erm_max_iters = 1000;
  double erm_tol = 1e-9;
  /// LQA settings; gamma <= 0 selects the data-driven default.
  double lqa_R = 1.0;
  double lqa_eta = 0.05;
  int lqa_T = 3;
  double gamma = 0.0;
  /// Oblique unless tau == 0 (or forced).
  std::optional<RotationMode> mode;
  int promax_power = 4;
  int varimax_restarts = 10;
  /// Kaiser row normalization inside the varimax baseline (and its bias).
  bool varimax_kaiser = true;
  /// Per-replication error rows kept in the tidy output (first k rows of A).
  Index keep_rows = 5;

  void validate() const;
};

/// Per-entry aggregates over successful replications (q x r matrices).
struct EntryStats {
  Matrix bias;
  Matrix sd;
  Matrix mse_scaled;  // n * mean squared error
  Matrix coverage;
  Matrix q05, q50, q95;
};

struct MethodSummary {
  SimMethod method{};
  int successes = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  EntryStats A;
  double mean_coverage_A = 0.0;
  double mean_scaled_mse_A = 0.0;
  double mean_abs_bias_A = 0.0;
  /// Latent-variable metrics (oracle and Folomin only; NaN otherwise).
  double mean_coverage_Z = 0.0;
  double mean_scaled_mse_Z = 0.0;
  double seconds = 0.0;
  /// errors[rep](row, col) and covered[rep](row, col) for the first keep_rows
  /// rows; empty matrices mark failed replications.
  std::vector<Matrix> kept_errors;
  std::vector<Matrix> kept_covered;
};

struct SimResult {
  SimDesign design;
  SimOptions options;
  std::vector<MethodSummary> methods;
  /// Truth of replication 0 (the fixed truth unless regenerate_params).
  Matrix A_star;
  std::string rng_name;

  const MethodSummary* find(SimMethod m) const;
};

SimResult run_replications(const SimDesign& design, const SimOptions& options);

/// Tidy table: method,matrix,rep,row,col,metric,value. Aggregate rows carry
/// rep = "all"; 1-based row/col. Values are written with 17 significant
/// digits.
void write_replications_csv(const SimResult& result, std::ostream& out);

/// JSON text with design, options, per-method summaries and metadata.
std::string summary_json(const SimResult& result, double wall_seconds);

/// Streaming mean/variance (Welford).
class RunningStats {
 public:
  void push(double x);
  long count() const { return n_; }
  double mean() const { return mean_; }
  /// Sample variance (n - 1 denominator); 0 for fewer than two values.
  double variance() const;

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Linear-interpolation (type 7) quantile of an unsorted sample.
double quantile(std::vector<double> values, double p);

}  // namespace folomin
