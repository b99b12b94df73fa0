#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "w5h/index.hpp"
#include "w5h/ltr.hpp"
#include "w5h/querygen.hpp"

namespace w5h {

// One retrieval method's outcomes over an evaluation set: the 1-based rank of
// each query's target, 0 when the target never appears in the method's list.
struct MethodRun {
  std::string method;
  std::vector<uint32_t> ranks;
};

// Mean of 1/rank over queries, 0 contribution beyond the cutoff.
double mrr_at(const MethodRun& run, int cutoff = 50);
// Fraction of queries with target rank <= k.
double success_at(const MethodRun& run, int k);

enum class WilcoxonMode { Auto, Normal, Exact };  // Auto = exact when n <= 25

struct WilcoxonResult {
  double W = 0;  // signed-rank statistic T+ - T-
  double p = 1;  // two-sided
  size_t n = 0;  // pairs after dropping zero differences
  bool exact = false;
};

// Signed-rank test with average ranks for tied |differences|. Normal mode
// uses the tie-corrected variance and a continuity correction; exact mode
// enumerates the sign-flip distribution. Throws TooFewPairs when fewer than
// min_pairs non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMode mode = WilcoxonMode::Auto, size_t min_pairs = 10);

struct MethodMetrics {
  double mrr = 0, s1 = 0, s3 = 0, s10 = 0;
  size_t n_queries = 0;
};

struct GroupComparison {
  std::string label;  // dimension names, e.g. "what,who,when"
  std::map<std::string, MethodMetrics> methods;
  std::map<std::string, std::optional<WilcoxonResult>> significance;
  std::map<std::string, MethodRun> runs;
};

struct ComparisonReport {
  std::map<int, GroupComparison> groups;
  GroupComparison overall;
  int cutoff = 50;
};

struct EvalOptions {
  int cutoff = 50;
  WilcoxonMode wilcoxon_mode = WilcoxonMode::Auto;
  size_t min_pairs = 10;
  int n_threads = 0;
};

// Scores the labeled evaluation set under the three methods: bm25 runs the
// query's what terms against the concatenated field over the whole corpus;
// bm25f ranks the retrieved candidate list; w5h-l2r re-ranks that list with
// the ensemble. Requires list sizes >= the metric cutoff for exact ranks.
ComparisonReport compare_methods(const LabeledRankingSet& eval_set, const InvertedIndex& idx,
                                 const Ensemble& model, const Bm25Params& params,
                                 const EvalOptions& opt = {});

std::string report_to_json(const ComparisonReport& report, const Ensemble& model,
                           const std::string& config_hash);

}  // namespace w5h
