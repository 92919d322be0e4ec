#include "folomin/cli.hpp"

#include "folomin/io.hpp"
#include "folomin/rng.hpp"
#include "folomin/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace folomin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numerical: return 4;
  }
  return 4;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

/// Writes files and the manifest that indexes them with their digests.
class ArtifactWriter {
 public:
  ArtifactWriter(std::string dir, std::string command, std::string manifest = "manifest.json")
      : dir_(std::move(dir)),
        command_(std::move(command)),
        manifest_(std::move(manifest)),
        t0_(Clock::now()) {
    ensure_dir(dir_);
  }

  void input(const std::string& path, const std::string& content) {
    inputs_[path] = io::fnv1a_hex(content);
  }

  void write(const std::string& name, const std::string& content) {
    const std::string path = join_path(dir_, name);
    io::write_file(path, content);
    outputs_[name] = io::fnv1a_hex(content);
    files_.push_back(path);
  }

  std::vector<std::string> finish(const json& config, std::uint64_t seed) {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["config"] = config;
    m["seed"] = seed;
    m["rng"] = std::string(Rng::kName);
    m["seconds"] = seconds_since(t0_);
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    const std::string path = join_path(dir_, manifest_);
    io::write_file(path, m.dump(2) + "\n");
    files_.push_back(path);
    return files_;
  }

 private:
  std::string dir_;
  std::string command_;
  std::string manifest_;
  Clock::time_point t0_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::vector<std::string> files_;
};

// ------------------------------------------------------------ config access

template <class T>
T get_key(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

Index get_count(const json& j, const char* key, Index fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>()))) {
    throw UsageError(std::string("config key '") + key + "' must be an integer");
  }
  const long long x = v.is_number_integer() ? v.get<long long>() : static_cast<long long>(v.get<double>());
  return static_cast<Index>(x);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<SimMethod> methods_for_losses(const std::string& losses) {
  std::vector<SimMethod> out = {SimMethod::Oracle};
  const auto names = split_list(losses);
  if (names.empty()) throw UsageError("config key 'loss' is empty");
  for (const std::string& name : names) {
    if (name == "all") {
      for (SimMethod m : {SimMethod::FolominSCAD, SimMethod::FolominMCP, SimMethod::FolominTL1}) {
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
      }
      continue;
    }
    SimMethod m{};
    if (name == "mcp") {
      m = SimMethod::FolominMCP;
    } else if (name == "scad") {
      m = SimMethod::FolominSCAD;
    } else if (name == "tl1") {
      m = SimMethod::FolominTL1;
    } else {
      throw UsageError("config key 'loss': unknown loss '" + name + "' (mcp, scad, tl1, all)");
    }
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  for (SimMethod m : {SimMethod::Varimax, SimMethod::VarimaxDebiased, SimMethod::Promax}) out.push_back(m);
  return out;
}

const std::set<std::string>& simulate_keys() {
  static const std::set<std::string> keys = {
      "n",        "q",          "r",         "tau",           "lambda",       "reps",
      "loss",     "methods",    "seed",      "family",        "variance",     "level",
      "simple_fraction",        "gamma",     "mode",          "M",            "lqa_R",
      "lqa_eta",  "lqa_T",      "promax_power",               "varimax_restarts",
      "varimax_kaiser",         "keep_rows", "random_simple_signs",           "regenerate_params",
      "erm_max_iters",          "erm_tol",   "out",           "plots"};
  return keys;
}

// ------------------------------------------------------------- report data

std::vector<MethodTable> tables_from_result(const SimResult& result) {
  std::ostringstream os;
  write_replications_csv(result, os);
  return parse_replications(os.str(), "<memory>");
}

std::string report_json_text(const std::vector<MethodTable>& tables) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    std::size_t m = 0;
    for (double x : v) {
      if (std::isfinite(x)) s += x, ++m;
    }
    return m ? s / static_cast<double>(m) : std::numeric_limits<double>::quiet_NaN();
  };
  json methods = json::object();
  for (const MethodTable& t : tables) {
    double abs_bias = 0.0;
    std::size_t m = 0;
    for (double b : t.bias) {
      if (std::isfinite(b)) abs_bias += std::abs(b), ++m;
    }
    methods[t.method] = {
        {"mean_coverage_A", finite_or_null(mean(t.coverage))},
        {"mean_scaled_mse_A", finite_or_null(mean(t.mse_scaled))},
        {"mean_abs_bias_A",
         finite_or_null(m ? abs_bias / static_cast<double>(m) : std::numeric_limits<double>::quiet_NaN())},
        {"mean_coverage_Z", t.coverage_Z ? finite_or_null(*t.coverage_Z) : json(nullptr)},
        {"mean_scaled_mse_Z", t.mse_scaled_Z ? finite_or_null(*t.mse_scaled_Z) : json(nullptr)},
        {"entries", t.coverage.size()},
        {"replications", t.errors_11.size()}};
  }
  json j;
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

void write_plots(ArtifactWriter& w, const std::vector<MethodTable>& tables, double level) {
  std::vector<svg::Series> errs, mse, cov;
  for (const MethodTable& t : tables) {
    errs.push_back({t.method, t.errors_11});
    mse.push_back({t.method, t.mse_scaled});
    cov.push_back({t.method, t.coverage});
  }
  w.write("bias_hist.svg", svg::histograms("Estimation error of a_11 across replications", errs, 25, 0.0));
  w.write("mse.svg", svg::strips("Scaled MSE per entry of A", "n x MSE", mse));
  w.write("coverage.svg", svg::strips("Wald coverage per entry of A", "coverage", cov, level));
}

std::string text_table(const std::vector<MethodTable>& tables) {
  std::ostringstream os;
  os << "method               coverage_A  scaled_mse_A  reps\n";
  for (const MethodTable& t : tables) {
    double c = 0.0, m = 0.0;
    std::size_t nc = 0, nm = 0;
    for (double x : t.coverage) {
      if (std::isfinite(x)) c += x, ++nc;
    }
    for (double x : t.mse_scaled) {
      if (std::isfinite(x)) m += x, ++nm;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-20s %11.4f %13.4f %5zu\n", t.method.c_str(),
                  nc ? c / nc : std::numeric_limits<double>::quiet_NaN(),
                  nm ? m / nm : std::numeric_limits<double>::quiet_NaN(), t.errors_11.size());
    os << buf;
  }
  return os.str();
}

// --------------------------------------------------------------- fit model

Matrix center_columns(Matrix Y, std::vector<double>& means) {
  means.resize(static_cast<std::size_t>(Y.cols()));
  for (Index j = 0; j < Y.cols(); ++j) {
    const double m = Y.col(j).mean();
    means[static_cast<std::size_t>(j)] = m;
    Y.col(j).array() -= m;
  }
  return Y;
}

std::vector<std::string> factor_header(Index r) {
  std::vector<std::string> h;
  for (Index l = 0; l < r; ++l) h.push_back("F" + std::to_string(l + 1));
  return h;
}

}  // namespace

// ------------------------------------------------------------------ simulate

SimulateRequest simulate_request_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!simulate_keys().count(item.key())) throw UsageError("unknown config key '" + item.key() + "'");
  }
  if (!j.contains("r") || j.at("r").is_null()) {
    throw UsageError("missing required setting 'r' (the latent dimension; pass --r or set \"r\")");
  }
  SimulateRequest req;
  SimDesign& d = req.design;
  SimOptions& o = req.options;
  d.n = get_count(j, "n", d.n);
  d.q = get_count(j, "q", d.q);
  d.r = get_count(j, "r", d.r);
  if (d.n < 1) throw UsageError("config key 'n' must be positive");
  if (d.q < 1) throw UsageError("config key 'q' must be positive");
  if (d.r < 1) throw UsageError("config key 'r' must be positive");
  d.tau = get_key(j, "tau", d.tau);
  if (!(d.tau >= 0.0 && d.tau < 1.0)) throw UsageError("config key 'tau' must lie in [0, 1)");
  d.lambda_signal = get_key(j, "lambda", d.lambda_signal);
  if (!(d.lambda_signal > 0.0)) throw UsageError("config key 'lambda' must be positive");
  d.simple_fraction = get_key(j, "simple_fraction", d.simple_fraction);
  d.seed = get_key<std::uint64_t>(j, "seed", d.seed);
  const double variance = get_key(j, "variance", 1.0);
  d.family = ResponseFamily::parse(get_key<std::string>(j, "family", "bernoulli"), variance);
  d.random_simple_signs = get_key(j, "random_simple_signs", d.random_simple_signs);
  d.regenerate_params = get_key(j, "regenerate_params", d.regenerate_params);

  const Index reps = get_count(j, "reps", o.n_reps);
  if (reps < 1) throw UsageError("config key 'reps' must be at least 1");
  o.n_reps = static_cast<int>(reps);
  if (j.contains("methods")) {
    o.methods.clear();
    for (const std::string& m : split_list(get_key<std::string>(j, "methods", ""))) {
      o.methods.push_back(parse_sim_method(m));
    }
    if (o.methods.empty()) throw UsageError("config key 'methods' is empty");
  } else {
    o.methods = methods_for_losses(get_key<std::string>(j, "loss", "all"));
  }
  o.level = get_key(j, "level", o.level);
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("config key 'level' must lie in (0, 1)");
  o.gamma = get_key(j, "gamma", o.gamma);
  if (j.contains("mode")) o.mode = parse_rotation_mode(get_key<std::string>(j, "mode", ""));
  o.M = get_key(j, "M", o.M);
  o.lqa_R = get_key(j, "lqa_R", o.lqa_R);
  o.lqa_eta = get_key(j, "lqa_eta", o.lqa_eta);
  o.lqa_T = static_cast<int>(get_count(j, "lqa_T", o.lqa_T));
  o.promax_power = static_cast<int>(get_count(j, "promax_power", o.promax_power));
  o.varimax_restarts = static_cast<int>(get_count(j, "varimax_restarts", o.varimax_restarts));
  o.varimax_kaiser = get_key(j, "varimax_kaiser", o.varimax_kaiser);
  o.keep_rows = get_count(j, "keep_rows", o.keep_rows);
  o.erm_max_iters = static_cast<int>(get_count(j, "erm_max_iters", o.erm_max_iters));
  o.erm_tol = get_key(j, "erm_tol", o.erm_tol);
  req.out_dir = get_key<std::string>(j, "out", req.out_dir);
  req.plots = get_key(j, "plots", req.plots);
  d.validate();
  o.validate();
  return req;
}

namespace {

json simulate_config_json(const SimulateRequest& req) {
  const SimDesign& d = req.design;
  const SimOptions& o = req.options;
  json methods = json::array();
  for (SimMethod m : o.methods) methods.push_back(to_string(m));
  json j = {{"n", d.n},
            {"q", d.q},
            {"r", d.r},
            {"tau", d.tau},
            {"lambda", d.lambda_signal},
            {"family", d.family.name()},
            {"variance", d.family.variance()},
            {"simple_fraction", d.simple_fraction},
            {"seed", d.seed},
            {"random_simple_signs", d.random_simple_signs},
            {"regenerate_params", d.regenerate_params},
            {"reps", o.n_reps},
            {"methods", methods},
            {"level", o.level},
            {"gamma", o.gamma},
            {"M", o.M},
            {"lqa_R", o.lqa_R},
            {"lqa_eta", o.lqa_eta},
            {"lqa_T", o.lqa_T},
            {"promax_power", o.promax_power},
            {"varimax_restarts", o.varimax_restarts},
            {"varimax_kaiser", o.varimax_kaiser},
            {"keep_rows", o.keep_rows},
            {"erm_max_iters", o.erm_max_iters},
            {"erm_tol", o.erm_tol}};
  j["mode"] = o.mode ? json(to_string(*o.mode)) : json(nullptr);
  return j;
}

}  // namespace

SimulateOutcome cmd_simulate(const SimulateRequest& request) {
  request.design.validate();
  request.options.validate();
  const auto t0 = Clock::now();
  ArtifactWriter w(request.out_dir, "simulate");
  SimulateOutcome out;
  out.result = run_replications(request.design, request.options);
  const double wall = seconds_since(t0);

  std::ostringstream csv;
  write_replications_csv(out.result, csv);
  w.write("replications.csv", csv.str());
  json summary = json::parse(summary_json(out.result, wall));
  summary["manifest"] = "manifest.json";
  w.write("summary.json", summary.dump(2) + "\n");
  if (request.plots) write_plots(w, tables_from_result(out.result), request.options.level);
  out.files = w.finish(simulate_config_json(request), request.design.seed);
  return out;
}

// ----------------------------------------------------------------------- fit

PreparedData prepare_data(const std::string& path, const std::string& family, bool center) {
  const ResponseFamily fam = ResponseFamily::parse(family);
  if (center && fam.kind() != FamilyKind::Gaussian) {
    throw UsageError("--center is only meaningful for the gaussian family");
  }
  const std::string text = io::read_file(path);
  io::CsvTable t = io::parse_csv(text, path);
  if (t.values.rows() == 0) throw DataError(path + ": no data rows");
  PreparedData p;
  p.header = t.header;
  p.digest = io::fnv1a_hex(text);
  for (Index j = 0; j < t.values.cols(); ++j) {
    for (Index i = 0; i < t.values.rows(); ++i) {
      if (!fam.in_domain(t.values(i, j))) {
        std::ostringstream os;
        os << path << ": value " << io::format_double(t.values(i, j)) << " at data row " << i + 1
           << ", column " << j + 1 << " ('" << t.header[static_cast<std::size_t>(j)]
           << "') is outside the " << fam.name() << " support";
        throw DataError(os.str());
      }
    }
  }
  if (center) {
    p.values = center_columns(std::move(t.values), p.column_means);
  } else {
    p.values = std::move(t.values);
  }
  return p;
}

namespace {

json folomin_options_json(const FolominOptions& f) {
  json j = {{"loss", make_loss(f.loss, 1.0).name()},
            {"gamma", f.gamma},
            {"R", f.R},
            {"eta", f.eta},
            {"T", f.T},
            {"mode", to_string(f.mode)},
            {"delta_primes", f.delta_primes},
            {"min_set_size", f.min_set_size},
            {"extra_sets", f.extra_sets},
            {"max_combinations", f.max_combinations}};
  j["delta"] = f.delta ? json(*f.delta) : json(nullptr);
  j["lambda_gen"] = f.lambda_gen ? json(*f.lambda_gen) : json(nullptr);
  return j;
}

}  // namespace

FitOutcome cmd_fit(const FitRequest& req) {
  if (req.r < 1) throw UsageError("--r must be a positive integer");
  req.folomin.validate();
  req.erm.validate();
  FitOutcome out;
  out.data = prepare_data(req.data_path, req.family, req.center);
  const Index n = out.data.values.rows(), q = out.data.values.cols();
  if (n < req.r || q < req.r) {
    throw UsageError("data has n = " + std::to_string(n) + " rows and q = " + std::to_string(q) +
                     " columns; need n, q >= r = " + std::to_string(req.r));
  }
  ArtifactWriter w(req.out_dir, "fit");
  w.input(req.data_path, io::read_file(req.data_path));

  const ResponseMatrix Y(out.data.values, ResponseFamily::parse(req.family, req.variance));
  out.erm = erm_fit(Y, req.r, req.erm);
  out.folomin = folomin_rotate(Y, out.erm.params, req.folomin);
  const ParamPair& P = out.folomin.params;

  w.write("A.csv", io::to_csv(P.A, factor_header(req.r)));
  w.write("Z.csv", io::to_csv(P.Z, factor_header(req.r)));

  json trace = json::array();
  for (const LqaIteration& it : out.folomin.lqa.trace.iterations) {
    trace.push_back({{"criterion", it.criterion}, {"step_norm", it.step_norm}, {"blend", it.blend}});
  }
  json rot;
  rot["manifest"] = "manifest.json";
  rot["data"] = fs::absolute(req.data_path).string();
  rot["data_digest"] = out.data.digest;
  rot["family"] = Y.family().name();
  rot["variance"] = Y.family().variance();
  rot["center"] = req.center;
  rot["column_means"] = out.data.column_means;
  rot["items"] = out.data.header;
  rot["n"] = n;
  rot["q"] = q;
  rot["r"] = req.r;
  rot["rotation"] = matrix_json(out.folomin.rotation);
  rot["loss"] = out.folomin.loss.name();
  rot["gamma"] = out.folomin.gamma;
  rot["delta_prime"] = out.folomin.delta_prime;
  rot["mode"] = to_string(req.folomin.mode);
  rot["initial_criterion"] = out.folomin.lqa.trace.initial_criterion;
  rot["lqa_trace"] = trace;
  rot["erm"] = {{"iterations", out.erm.iterations},
                {"converged", out.erm.status == FitStatus::Converged},
                {"M", out.erm.M},
                {"objective", out.erm.objective.empty() ? json(nullptr) : json(out.erm.objective.back())},
                {"warning", out.erm.warning}};
  w.write("rotation.json", rot.dump(2) + "\n");

  json config = {{"data", req.data_path},
                 {"family", req.family},
                 {"variance", req.variance},
                 {"center", req.center},
                 {"r", req.r},
                 {"folomin", folomin_options_json(req.folomin)},
                 {"erm", {{"M", req.erm.M}, {"max_iters", req.erm.max_iters}, {"tol", req.erm.tol}}}};
  out.files = w.finish(config, req.erm.seed);
  return out;
}

// --------------------------------------------------------------------- infer

InferOutcome cmd_infer(const InferRequest& req) {
  if (!(req.level > 0.0 && req.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  if (!(req.alpha > 0.0 && req.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  const std::string rot_path = join_path(req.model_dir, "rotation.json");
  const std::string a_path = join_path(req.model_dir, "A.csv");
  const std::string z_path = join_path(req.model_dir, "Z.csv");
  for (const std::string& p : {rot_path, a_path, z_path}) {
    if (!fs::exists(p)) throw DataError("missing model file " + p + " (run fit first)");
  }
  json rot;
  try {
    rot = json::parse(io::read_file(rot_path));
  } catch (const json::exception& e) {
    throw DataError(rot_path + ": " + e.what());
  }
  const std::string data_path = req.data_path.empty() ? rot.value("data", std::string()) : req.data_path;
  if (data_path.empty()) throw UsageError("no data file recorded in the model; pass --data");
  const std::string family = rot.value("family", std::string("gaussian"));
  const PreparedData data = prepare_data(data_path, family, rot.value("center", false));
  if (rot.contains("data_digest") && rot["data_digest"] != data.digest) {
    std::cerr << "warning: " << data_path << " differs from the data used by fit\n";
  }

  ParamPair P;
  P.A = io::read_csv(a_path).values;
  P.Z = io::read_csv(z_path).values;
  if (P.A.cols() != P.Z.cols() || P.Z.rows() != data.values.rows() || P.A.rows() != data.values.cols()) {
    throw DataError("model files do not match the data shape");
  }
  const ResponseMatrix Y(data.values, ResponseFamily::parse(family, rot.value("variance", 1.0)));

  InferOutcome out;
  out.report = build_inference_report(Y, P, req.level, req.alpha, req.per_column, false);
  const WaldTable& wa = out.report.wald_A;
  const Matrix& p_adj = req.adjust == Adjustment::BH ? out.report.p_bh : out.report.p_bonferroni;

  std::ostringstream csv;
  csv << "row,col,item,estimate,se,z,p,p_bh,p_bonferroni,p_adjusted,lower,upper,significant\n";
  for (Index j = 0; j < P.A.rows(); ++j) {
    for (Index l = 0; l < P.A.cols(); ++l) {
      const std::string item =
          static_cast<std::size_t>(j) < data.header.size() ? data.header[static_cast<std::size_t>(j)] : "";
      csv << j + 1 << ',' << l + 1 << ',' << item << ',' << io::format_double(wa.estimate(j, l)) << ','
          << io::format_double(wa.se(j, l)) << ',' << io::format_double(wa.z(j, l)) << ','
          << io::format_double(wa.p(j, l)) << ',' << io::format_double(out.report.p_bh(j, l)) << ','
          << io::format_double(out.report.p_bonferroni(j, l)) << ',' << io::format_double(p_adj(j, l))
          << ',' << io::format_double(wa.lower(j, l)) << ',' << io::format_double(wa.upper(j, l)) << ','
          << (p_adj(j, l) <= req.alpha ? 1 : 0) << '\n';
    }
  }
  ArtifactWriter w(req.out_dir.empty() ? req.model_dir : req.out_dir, "infer", "inference_manifest.json");
  w.input(data_path, io::read_file(data_path));
  for (const std::string& p : {rot_path, a_path, z_path}) w.input(p, io::read_file(p));
  w.write("inference.csv", csv.str());
  if (req.heatmap) {
    Matrix sig(P.A.rows(), P.A.cols());
    for (Index j = 0; j < sig.rows(); ++j) {
      for (Index l = 0; l < sig.cols(); ++l) sig(j, l) = p_adj(j, l) <= req.alpha ? std::abs(P.A(j, l)) : 0.0;
    }
    const double hi = std::max(sig.maxCoeff(), 1e-12);
    w.write("significance.svg",
            svg::heatmap("|a_jl| of entries significant after adjustment", sig, 0.0, hi, factor_header(P.r())));
  }
  json config = {{"model_dir", req.model_dir},
                 {"data", data_path},
                 {"level", req.level},
                 {"alpha", req.alpha},
                 {"adjust", req.adjust == Adjustment::BH ? "bh" : "bonferroni"},
                 {"per_column", req.per_column}};
  out.files = w.finish(config, 0);
  return out;
}

// -------------------------------------------------------------------- report

std::vector<MethodTable> parse_replications(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::vector<MethodTable> tables;
  auto table_for = [&](const std::string& method) -> MethodTable& {
    for (MethodTable& t : tables) {
      if (t.method == method) return t;
    }
    tables.push_back(MethodTable{});
    tables.back().method = method;
    return tables.back();
  };
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "method,matrix,rep,row,col,metric,value") {
        throw DataError(source + ": unexpected header '" + line + "'");
      }
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) {
      throw DataError(source + ": line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                      " fields, expected 7");
    }
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = f[6] == "nan" || f[6] == "-nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[6], &used);
      if (f[6] != "nan" && f[6] != "-nan" && used != f[6].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(source + ": non-numeric value '" + f[6] + "' at line " + std::to_string(lineno) +
                      ", column 7");
    }
    MethodTable& t = table_for(f[0]);
    const std::string& metric = f[5];
    if (f[1] == "Z") {
      if (metric == "coverage") t.coverage_Z = v;
      if (metric == "mse_scaled") t.mse_scaled_Z = v;
      continue;
    }
    if (f[2] == "all") {
      if (metric == "coverage") t.coverage.push_back(v);
      if (metric == "mse_scaled") t.mse_scaled.push_back(v);
      if (metric == "bias") t.bias.push_back(v);
    } else if (metric == "error" && f[3] == "1" && f[4] == "1") {
      t.errors_11.push_back(v);
    }
  }
  if (tables.empty()) throw DataError(source + ": no replication rows");
  return tables;
}

ReportOutcome cmd_report(const ReportRequest& req) {
  std::string input = req.input;
  if (fs::is_directory(input)) input = join_path(input, "replications.csv");
  const std::string text = io::read_file(input);
  ReportOutcome out;
  out.methods = parse_replications(text, input);
  ArtifactWriter w(req.out_dir, "report", "report_manifest.json");
  w.input(input, text);
  json rep = json::parse(report_json_text(out.methods));
  rep["manifest"] = "report_manifest.json";
  w.write("report.json", rep.dump(2) + "\n");
  if (req.plots) write_plots(w, out.methods, req.level);
  out.table = text_table(out.methods);
  out.files = w.finish({{"input", input}, {"level", req.level}, {"plots", req.plots}}, 0);
  return out;
}

// ---------------------------------------------------------------------- main

int main_entry(int argc, char** argv) {
  CLI::App app{"Sparse representation learning by folded-loss rotation", "folomin"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo replication study");
  std::string sim_config;
  Index s_n = 0, s_q = 0, s_r = 0, s_reps = 0, s_keep = 0;
  double s_tau = 0, s_lambda = 0, s_level = 0, s_gamma = 0, s_variance = 1;
  std::uint64_t s_seed = 0;
  std::string s_loss, s_methods, s_family, s_mode, s_out;
  bool s_no_plots = false, s_random_signs = false, s_regenerate = false, s_no_kaiser = false;
  sim->add_option("--config", sim_config, "JSON file with design and options");
  auto* o_n = sim->add_option("--n", s_n, "number of subjects");
  auto* o_q = sim->add_option("--q", s_q, "number of items");
  auto* o_r = sim->add_option("--r", s_r, "latent dimension");
  auto* o_tau = sim->add_option("--tau", s_tau, "latent correlation tau^|l-h|");
  auto* o_lambda = sim->add_option("--lambda", s_lambda, "signal truncation level");
  auto* o_reps = sim->add_option("--reps", s_reps, "replications");
  auto* o_loss = sim->add_option("--loss", s_loss, "mcp, scad, tl1, all or a comma list");
  auto* o_methods = sim->add_option("--methods", s_methods, "explicit comma list of methods");
  auto* o_seed = sim->add_option("--seed", s_seed, "master seed");
  auto* o_family = sim->add_option("--family", s_family, "bernoulli, gaussian or poisson");
  auto* o_variance = sim->add_option("--variance", s_variance, "gaussian noise variance");
  auto* o_level = sim->add_option("--level", s_level, "confidence level");
  auto* o_gamma = sim->add_option("--gamma", s_gamma, "folded-loss gamma (<= 0: data-driven)");
  auto* o_mode = sim->add_option("--mode", s_mode, "oblique or orthogonal");
  auto* o_keep = sim->add_option("--keep-rows", s_keep, "rows of A with per-replication output");
  auto* o_out = sim->add_option("--out", s_out, "output directory");
  sim->add_flag("--no-plots", s_no_plots, "skip SVG output");
  sim->add_flag("--random-signs", s_random_signs, "random signs on simple rows");
  sim->add_flag("--regenerate", s_regenerate, "fresh truth in every replication");
  sim->add_flag("--no-kaiser", s_no_kaiser, "plain (unnormalized) varimax baseline");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit and rotate a latent-variable model");
  FitRequest fr;
  double f_gamma = 0.0, f_delta = -1.0, f_lambda_gen = -1.0;
  std::string f_loss = "mcp", f_mode = "oblique";
  fit->add_option("data,--data", fr.data_path, "response CSV with a header row")->required();
  fit->add_option("--family", fr.family, "gaussian, bernoulli or poisson")->required();
  fit->add_option("--variance", fr.variance, "gaussian noise variance");
  fit->add_flag("--center", fr.center, "centre each column");
  fit->add_option("--r", fr.r, "latent dimension")->required();
  fit->add_option("--loss", f_loss, "mcp, scad or tl1");
  fit->add_option("--gamma", f_gamma, "folded-loss gamma (<= 0: data-driven)");
  fit->add_option("--mode", f_mode, "oblique or orthogonal");
  fit->add_option("--radius", fr.folomin.R, "LQA trust radius R");
  fit->add_option("--eta", fr.folomin.eta, "LQA smoothing eta");
  fit->add_option("--lqa-steps", fr.folomin.T, "LQA iterations T");
  fit->add_option("--delta", f_delta, "similarity norm floor (default: automatic)");
  fit->add_option("--lambda-gen", f_lambda_gen, "known signal bound for the automatic delta");
  fit->add_option("--row-cap", fr.erm.M, "ERM row-norm cap M (<= 0: automatic)");
  fit->add_option("--max-iters", fr.erm.max_iters, "ERM sweeps");
  fit->add_option("--tol", fr.erm.tol, "ERM relative tolerance");
  fit->add_option("--seed", fr.erm.seed, "seed");
  fit->add_option("--out", fr.out_dir, "output directory");

  // infer
  auto* inf = app.add_subcommand("infer", "Plug-in inference for a fitted model");
  InferRequest ir;
  std::string adjust = "bh";
  bool no_heatmap = false;
  inf->add_option("--model", ir.model_dir, "directory written by fit");
  inf->add_option("--data", ir.data_path, "response CSV (default: the one used by fit)");
  inf->add_option("--level", ir.level, "confidence level");
  inf->add_option("--alpha", ir.alpha, "significance level for the adjusted p-values");
  inf->add_option("--adjust", adjust, "bh or bonferroni")
      ->check(CLI::IsMember({"bh", "bonferroni"}));
  inf->add_flag("--per-column,!--pooled", ir.per_column, "adjust each column of A separately");
  inf->add_flag("--no-heatmap", no_heatmap, "skip the SVG heatmap");
  inf->add_option("--out", ir.out_dir, "output directory (default: the model directory)");

  // report
  auto* rep = app.add_subcommand("report", "Summaries and plots from replications.csv");
  ReportRequest rr;
  bool r_no_plots = false;
  rep->add_option("input,--input", rr.input, "replications.csv or its directory");
  rep->add_option("--out", rr.out_dir, "output directory");
  rep->add_option("--level", rr.level, "nominal coverage drawn on the plot");
  rep->add_flag("--no-plots", r_no_plots, "skip SVG output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      json j = json::object();
      if (!sim_config.empty()) {
        try {
          j = json::parse(io::read_file(sim_config));
        } catch (const json::exception& e) {
          throw UsageError(sim_config + ": " + e.what());
        }
      }
      if (!j.is_object()) throw UsageError(sim_config + ": config must be a JSON object");
      auto set = [&](CLI::Option* opt, const char* key, const json& v) {
        if (opt->count() > 0) j[key] = v;
      };
      set(o_n, "n", s_n);
      set(o_q, "q", s_q);
      set(o_r, "r", s_r);
      set(o_tau, "tau", s_tau);
      set(o_lambda, "lambda", s_lambda);
      set(o_reps, "reps", s_reps);
      set(o_loss, "loss", s_loss);
      set(o_methods, "methods", s_methods);
      set(o_seed, "seed", s_seed);
      set(o_family, "family", s_family);
      set(o_variance, "variance", s_variance);
      set(o_level, "level", s_level);
      set(o_gamma, "gamma", s_gamma);
      set(o_mode, "mode", s_mode);
      set(o_keep, "keep_rows", s_keep);
      set(o_out, "out", s_out);
      if (s_no_plots) j["plots"] = false;
      if (s_random_signs) j["random_simple_signs"] = true;
      if (s_regenerate) j["regenerate_params"] = true;
      if (s_no_kaiser) j["varimax_kaiser"] = false;
      const SimulateOutcome o = cmd_simulate(simulate_request_from_json(j.dump()));
      std::cout << text_table(tables_from_result(o.result));
      for (const auto& m : o.result.methods) {
        if (m.failures > 0) {
          std::cerr << to_string(m.method) << ": " << m.failures << " failed replication(s)\n";
        }
      }
      for (const auto& f : o.files) std::cout << "wrote " << f << '\n';
    } else if (fit->parsed()) {
      fr.folomin.loss = FoldedLoss::parse(f_loss, 1.0).kind();
      fr.folomin.gamma = f_gamma;
      fr.folomin.mode = parse_rotation_mode(f_mode);
      if (f_delta > 0.0) fr.folomin.delta = f_delta;
      if (f_lambda_gen > 0.0) fr.folomin.lambda_gen = f_lambda_gen;
      const FitOutcome o = cmd_fit(fr);
      std::cout << "loss " << o.folomin.loss.name() << ", gamma " << o.folomin.gamma << ", criterion "
                << criterion_folomin(o.folomin.params.A, o.folomin.loss) << '\n';
      for (const auto& f : o.files) std::cout << "wrote " << f << '\n';
    } else if (inf->parsed()) {
      ir.adjust = adjust == "bh" ? Adjustment::BH : Adjustment::Bonferroni;
      ir.heatmap = !no_heatmap;
      const InferOutcome o = cmd_infer(ir);
      for (const auto& f : o.files) std::cout << "wrote " << f << '\n';
    } else if (rep->parsed()) {
      rr.plots = !r_no_plots;
      const ReportOutcome o = cmd_report(rr);
      std::cout << o.table;
      for (const auto& f : o.files) std::cout << "wrote " << f << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace folomin::cli
