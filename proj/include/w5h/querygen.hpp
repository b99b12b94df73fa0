#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "w5h/features.hpp"
#include "w5h/object.hpp"

namespace w5h {

struct QueryTemplate {
  DimMask dims = 0;
  int values_per_dim = 1;  // v
};

// The four query groups: {what,who}, {what,who,when}, {what,who,when,how},
// {what,who,how}. where is left out of the defaults (rare in personal data)
// but custom templates may use it.
std::vector<QueryTemplate> default_templates(int values_per_dim = 1);

struct GeneratedQuery {
  QueryObject query;
  uint32_t target = 0;  // dataset ordinal
};

// Known-item query generation: pick a target uniformly (re-drawing, within a
// bounded budget, until it has items for every template dimension), then
// sample v values per dimension from the target. what terms are TF-weighted
// over the target's terms of length >= 3; when draws from the target's
// finest-granularity tokens; the rest are uniform over distinct items.
GeneratedQuery generate_query(const Dataset& d, const QueryTemplate& t, uint64_t seed,
                              bool tf_weighted_what = true, int retry_budget = 64);

struct LabeledCandidate {
  std::string object_id;
  double bm25f = 0;
  FeatureVector x;
  int label = 0;
};

struct LabeledQuery {
  uint32_t qid = 0;
  int group = 0;  // 1-based template ordinal
  QueryObject query;
  std::string target_id;
  std::vector<LabeledCandidate> candidates;
};

struct LabeledRankingSet {
  std::vector<LabeledQuery> queries;
};

struct QuerygenOptions {
  size_t n_queries = 1;
  std::vector<QueryTemplate> templates = default_templates();
  uint64_t seed = 1;
  size_t list_size = 100;
  bool tf_weighted_what = true;
  int retry_budget = 64;
  int n_threads = 0;
};

// Queries round-robin over templates; candidates are the BM25F top
// list_size with the target appended when retrieval misses it; the target
// gets label 1, everything else 0. Queries whose retrieval yields a single
// candidate are re-drawn so training always sees comparable pairs.
LabeledRankingSet build_labeled_set(const FeatureExtractor& fx, const QuerygenOptions& opt);

std::map<int, LabeledRankingSet> split_by_group(const LabeledRankingSet& s);

struct OverlapReport {
  size_t shared_targets = 0;
  size_t shared_query_target_pairs = 0;
};
OverlapReport target_overlap(const LabeledRankingSet& a, const LabeledRankingSet& b);

// Feature file (features module format) plus a query manifest with one JSON
// record per query: {"qid":..,"group":..,"target":..,"query":{...}}.
void save_labeled_set(const LabeledRankingSet& s, const std::string& features_path,
                      const std::string& manifest_path);
LabeledRankingSet load_labeled_set(const std::string& features_path, const std::string& manifest_path);

}  // namespace w5h
