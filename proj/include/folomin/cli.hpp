#pragma once

#include "folomin/erm.hpp"
#include "folomin/inference.hpp"
#include "folomin/pipeline.hpp"
#include "folomin/sim.hpp"
#include "folomin/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace folomin::cli {

inline constexpr const char* kVersion = "0.1.0";

/// 0 success, 2 usage, 3 data, 4 numerical.
int exit_code(ErrorKind kind);

// ---------------------------------------------------------------- simulate

struct SimulateRequest {
  SimDesign design;
  SimOptions options;
  std::string out_dir = ".";
  bool plots = true;
};

/// Builds a request from a JSON object (config file contents merged with
/// command-line overrides). `r` is required; unknown keys, mistyped values
/// and invalid settings raise UsageError naming the key.
SimulateRequest simulate_request_from_json(const std::string& json_text);

struct SimulateOutcome {
  SimResult result;
  std::vector<std::string> files;
};

/// Runs the replications and writes replications.csv, summary.json,
/// manifest.json and (unless disabled) bias_hist.svg, mse.svg, coverage.svg.
SimulateOutcome cmd_simulate(const SimulateRequest& request);

// --------------------------------------------------------------------- fit

struct FitRequest {
  std::string data_path;
  std::string family = "gaussian";
  double variance = 1.0;
  bool center = false;
  Index r = 0;
  FolominOptions folomin;
  FitConfig erm;
  std::string out_dir = ".";
};

/// Responses as read from CSV, optionally centred per column.
struct PreparedData {
  std::vector<std::string> header;
  Matrix values;
  std::vector<double> column_means;  // empty when not centred
  std::string digest;
};

/// Reads and validates the CSV (ragged rows, non-numeric cells and
/// out-of-support responses raise DataError with 1-based coordinates).
/// Centering is only allowed for the Gaussian family.
PreparedData prepare_data(const std::string& path, const std::string& family, bool center);

struct FitOutcome {
  PreparedData data;
  FitResult erm;
  FolominFit folomin;
  std::vector<std::string> files;
};

/// erm_fit, initial rotation and LQA; writes A.csv, Z.csv, rotation.json and
/// manifest.json into out_dir.
FitOutcome cmd_fit(const FitRequest& request);

// ------------------------------------------------------------------- infer

struct InferRequest {
  std::string model_dir = ".";
  /// Overrides the data path recorded by fit.
  std::string data_path;
  double level = 0.95;
  double alpha = 0.05;
  Adjustment adjust = Adjustment::BH;
  bool per_column = true;
  bool heatmap = true;
  /// Defaults to model_dir.
  std::string out_dir;
};

struct InferOutcome {
  InferenceReport report;
  std::vector<std::string> files;
};

/// Reloads a fitted model, computes plug-in inference for every entry of A
/// and writes inference.csv (row, col, item, estimate, se, z, p, p_bh,
/// p_bonferroni, p_adjusted, lower, upper, significant),
/// inference_manifest.json and an optional significance heatmap.
InferOutcome cmd_infer(const InferRequest& request);

// ------------------------------------------------------------------ report

/// Method-level view of a tidy replications table.
struct MethodTable {
  std::string method;
  std::vector<double> coverage;    // per entry of A
  std::vector<double> mse_scaled;  // per entry of A
  std::vector<double> bias;        // per entry of A
  std::vector<double> errors_11;   // per replication, entry (1, 1)
  std::optional<double> coverage_Z;
  std::optional<double> mse_scaled_Z;
};

/// Parses replications.csv text (method,matrix,rep,row,col,metric,value).
std::vector<MethodTable> parse_replications(const std::string& text, const std::string& source);

struct ReportRequest {
  std::string input = "replications.csv";
  std::string out_dir = ".";
  double level = 0.95;
  bool plots = true;
};

struct ReportOutcome {
  std::vector<MethodTable> methods;
  std::vector<std::string> files;
  std::string table;  // human-readable summary
};

/// Rebuilds report.json, report_manifest.json and the plots from a
/// replications table.
ReportOutcome cmd_report(const ReportRequest& request);

/// Full command-line entry point (simulate | fit | infer | report).
int main_entry(int argc, char** argv);

}  // namespace folomin::cli
