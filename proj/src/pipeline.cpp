#include "folomin/pipeline.hpp"

#include "folomin/inference.hpp"

#include <algorithm>
#include <cmath>

namespace folomin {

void FolominOptions::validate() const {
  if (!(R > 0.0)) throw UsageError("R must be positive");
  if (!(eta > 0.0)) throw UsageError("eta must be positive");
  if (T < 0) throw UsageError("T must be nonnegative");
  if (delta_primes.empty()) throw UsageError("at least one delta_prime is required");
  for (double d : delta_primes) {
    if (!(d > 0.0 && d < 1.0)) throw UsageError("delta_prime values must lie in (0, 1)");
  }
  if (delta && !(*delta > 0.0)) throw UsageError("delta must be positive");
  if (extra_sets < 0) throw UsageError("extra_sets must be nonnegative");
  if (max_combinations < 1) throw UsageError("max_combinations must be positive");
}

FoldedLoss make_loss(LossKind kind, double gamma) {
  switch (kind) {
    case LossKind::SCAD: return FoldedLoss::scad(gamma);
    case LossKind::TruncatedL1: return FoldedLoss::truncated_l1(gamma);
    case LossKind::MCP: break;
  }
  return FoldedLoss::mcp(gamma);
}

namespace {

Matrix standard_errors_A(const ResponseMatrix& data, const ParamPair& p) {
  const auto rows = plugin_covariances_A(data, p);
  Matrix se(p.q(), p.r());
  for (Index j = 0; j < p.q(); ++j) {
    const RowCovariance& rc = rows[static_cast<std::size_t>(j)];
    for (Index l = 0; l < p.r(); ++l) se(j, l) = std::sqrt(std::max(rc.sandwich(l, l), 0.0) / rc.scale);
  }
  return se;
}

double binomial(Index k, Index r) {
  double c = 1.0;
  for (Index i = 0; i < r; ++i) c = c * static_cast<double>(k - i) / static_cast<double>(i + 1);
  return c;
}

// All r-subsets of {0..k-1} in lexicographic order.
std::vector<std::vector<Index>> combinations(Index k, Index r) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> c(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) c[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(c);
    Index i = r - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == k - r + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (Index t = i + 1; t < r; ++t) c[static_cast<std::size_t>(t)] = c[static_cast<std::size_t>(t - 1)] + 1;
  }
  return out;
}

struct Start {
  FolominCandidate info;
  InitResult init;
};

}  // namespace

FolominFit folomin_rotate(const ResponseMatrix& data, const ParamPair& erm,
                          const FolominOptions& options) {
  options.validate();
  const Index r = erm.r();
  InitConfig base = default_init_config(erm, options.lambda_gen);
  if (options.delta) base.delta = *options.delta;
  base.min_set_size = options.min_set_size;

  FolominFit out;
  std::vector<Start> starts;
  std::vector<std::vector<IndexSet>> seen;
  std::vector<double> gammas;
  std::string last_error;
  const double a3 = make_loss(options.loss, 1.0).a3();

  for (double dp : options.delta_primes) {
    InitConfig ic = base;
    ic.delta_prime = dp;
    const SelectedSets sel = select_disjoint_sets(erm, ic, r + options.extra_sets);
    Index kept = static_cast<Index>(sel.sets.size());
    if (kept < r) {
      FolominCandidate c;
      c.delta_prime = dp;
      c.error = "insufficient simple structure: found " + std::to_string(kept) +
                " disjoint candidate sets of size >= " + std::to_string(ic.min_set_size) +
                ", need " + std::to_string(r);
      last_error = c.error;
      out.candidates.push_back(c);
      continue;
    }
    while (kept > r && binomial(kept, r) > static_cast<double>(options.max_combinations)) --kept;
    for (const auto& combo : combinations(kept, r)) {
      FolominCandidate c;
      c.delta_prime = dp;
      c.combination = combo;
      std::vector<IndexSet> sets;
      for (Index k : combo) sets.push_back(sel.sets[static_cast<std::size_t>(k)]);
      if (std::find(seen.begin(), seen.end(), sets) != seen.end()) {
        c.duplicate = true;
        out.candidates.push_back(c);
        continue;
      }
      seen.push_back(sets);
      try {
        InitResult init = init_from_sets(erm, sets);
        init.similarity_used.anchors.clear();
        for (Index k : combo) init.similarity_used.anchors.push_back(sel.summary.anchors[static_cast<std::size_t>(k)]);
        init.similarity_used.candidate_sizes = sel.summary.candidate_sizes;
        init.similarity_used.pairs_above_threshold = sel.summary.pairs_above_threshold;
        const bool reference = combo.back() == r - 1;
        if (reference && !(options.gamma > 0.0)) {
          gammas.push_back(default_gamma(init.params.A, standard_errors_A(data, init.params), a3));
        }
        c.ok = true;
        starts.push_back({c, std::move(init)});
      } catch (const Error& e) {
        c.error = e.what();
        last_error = c.error;
        out.candidates.push_back(c);
      }
    }
  }
  if (starts.empty()) throw NumericalError(last_error);

  if (options.gamma > 0.0) {
    out.gamma = options.gamma;
  } else if (!gammas.empty()) {
    std::sort(gammas.begin(), gammas.end());
    out.gamma = gammas[(gammas.size() - 1) / 2];
  } else {
    out.gamma = default_gamma(starts.front().init.params.A,
                              standard_errors_A(data, starts.front().init.params), a3);
  }
  out.loss = make_loss(options.loss, out.gamma);

  LqaConfig lc;
  lc.loss = out.loss;
  lc.R = options.R;
  lc.eta = options.eta;
  lc.T = options.T;
  lc.mode = options.mode;

  std::optional<std::size_t> best;
  std::vector<LqaResult> results(starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    FolominCandidate& c = starts[k].info;
    try {
      results[k] = lqa_run(starts[k].init.params, lc);
      const auto& it = results[k].trace.iterations;
      c.criterion = it.empty() ? results[k].trace.initial_criterion : it.back().criterion;
      if (!best || c.criterion < starts[*best].info.criterion -
                                     1e-12 * std::max(1.0, std::abs(c.criterion))) {
        best = k;
      }
    } catch (const Error& e) {
      c.ok = false;
      c.error = e.what();
      last_error = c.error;
    }
  }
  for (const Start& s : starts) out.candidates.push_back(s.info);
  if (!best) throw NumericalError(last_error);

  out.delta_prime = starts[*best].info.delta_prime;
  out.init = std::move(starts[*best].init);
  out.lqa = std::move(results[*best]);
  out.params = out.lqa.params;
  out.rotation = out.lqa.G_total * out.init.rotation;
  return out;
}

}  // namespace folomin
