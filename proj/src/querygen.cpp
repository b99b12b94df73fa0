#include "w5h/querygen.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "w5h/textnorm.hpp"

namespace w5h {

std::vector<QueryTemplate> default_templates(int values_per_dim) {
  const DimMask what = dim_bit(Dim::What), who = dim_bit(Dim::Who), when = dim_bit(Dim::When),
                how = dim_bit(Dim::How);
  return {
      {static_cast<DimMask>(what | who), values_per_dim},
      {static_cast<DimMask>(what | who | when), values_per_dim},
      {static_cast<DimMask>(what | who | when | how), values_per_dim},
      {static_cast<DimMask>(what | who | how), values_per_dim},
  };
}

namespace {

// Sampling pool for one dimension of one target object.
std::vector<std::string> sample_pool(const TraceObject& o, Dim d) {
  std::vector<std::string> pool;
  if (d == Dim::What) {
    // TF-weighted: the multiset of terms, restricted to informative ones.
    for (const Item& t : o.items(d)) {
      if (t.size() >= 3) pool.push_back(t);
    }
    return pool;
  }
  if (d == Dim::When) {
    // finest granularity present
    TimeGranularity finest = TimeGranularity::MonthOfYear;
    bool any = false;
    for (const Item& t : o.items(d)) {
      auto g = time_token_granularity(t);
      if (!g) continue;
      if (!any || static_cast<int>(*g) > static_cast<int>(finest)) finest = *g;
      any = true;
    }
    if (!any) return pool;
    for (const Item& t : o.items(d)) {
      if (time_token_granularity(t) == finest &&
          std::find(pool.begin(), pool.end(), t) == pool.end()) {
        pool.push_back(t);
      }
    }
    return pool;
  }
  for (const Item& t : o.items(d)) {
    if (std::find(pool.begin(), pool.end(), t) == pool.end()) pool.push_back(t);
  }
  return pool;
}

// v draws without replacement; TF weighting falls out of drawing from the
// multiset and erasing every copy of a chosen value.
std::vector<std::string> draw_values(std::vector<std::string> pool, int v, std::mt19937_64& rng,
                                     bool uniform_distinct) {
  if (uniform_distinct) {
    std::vector<std::string> distinct;
    for (std::string& s : pool) {
      if (std::find(distinct.begin(), distinct.end(), s) == distinct.end()) distinct.push_back(std::move(s));
    }
    pool = std::move(distinct);
  }
  std::vector<std::string> out;
  for (int i = 0; i < v && !pool.empty(); ++i) {
    const std::string pick = pool[rng() % pool.size()];
    out.push_back(pick);
    std::erase(pool, pick);
  }
  return out;
}

}  // namespace

GeneratedQuery generate_query(const Dataset& d, const QueryTemplate& t, uint64_t seed,
                              bool tf_weighted_what, int retry_budget) {
  if (d.size() == 0) throw NoEligibleTarget("empty dataset");
  if (t.dims == 0 || (t.dims & ~kAllFeatureDims)) throw ConfigError("bad template dimension set");
  if (t.values_per_dim < 1) throw ConfigError("values_per_dim must be >= 1");

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    const uint32_t target = static_cast<uint32_t>(rng() % d.size());
    const TraceObject& o = d.at(target);
    GeneratedQuery g;
    g.target = target;
    bool eligible = true;
    for (Dim dim : kFeatureDims) {
      if (!mask_has(t.dims, dim)) continue;
      std::vector<std::string> values =
          draw_values(sample_pool(o, dim), t.values_per_dim, rng,
                      dim == Dim::What ? !tf_weighted_what : true);
      if (values.empty()) {
        eligible = false;
        break;
      }
      g.query.items(dim) = std::move(values);
    }
    if (eligible) return g;
  }
  throw NoEligibleTarget("no target with items in every template dimension after " +
                         std::to_string(retry_budget) + " attempts");
}

LabeledRankingSet build_labeled_set(const FeatureExtractor& fx, const QuerygenOptions& opt) {
  if (opt.n_queries < 1) throw ConfigError("n_queries must be >= 1");
  if (opt.templates.empty()) throw ConfigError("no query templates");
  if (opt.list_size < 2) throw ConfigError("list_size must be >= 2");

  const Dataset& d = fx.dataset();
  const InvertedIndex& idx = fx.index();

  LabeledRankingSet set;
  set.queries.resize(opt.n_queries);
  std::vector<std::string> errors(opt.n_queries);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) \
    num_threads(opt.n_threads > 0 ? opt.n_threads : omp_get_max_threads())
#endif
  for (size_t i = 0; i < opt.n_queries; ++i) {
    try {
      const QueryTemplate& tpl = opt.templates[i % opt.templates.size()];
      LabeledQuery lq;
      lq.qid = static_cast<uint32_t>(i + 1);
      lq.group = static_cast<int>(i % opt.templates.size()) + 1;

      // Re-draw until retrieval yields at least two candidates; each attempt
      // uses its own derived seed so results do not depend on other queries.
      for (int attempt = 0;; ++attempt) {
        if (attempt >= opt.retry_budget) {
          throw NoEligibleTarget("query " + std::to_string(i + 1) +
                                 ": no target with a non-trivial candidate list");
        }
        GeneratedQuery g = generate_query(
            d, tpl, derive_seed(opt.seed, i * 131071ULL + static_cast<uint64_t>(attempt)),
            opt.tf_weighted_what, opt.retry_budget);
        std::vector<ScoredDoc> retrieved = retrieve_candidates(g.query, idx, fx.params(), opt.list_size);
        bool has_target = false;
        for (const ScoredDoc& s : retrieved) has_target = has_target || s.doc == g.target;
        if (!has_target) {
          retrieved.push_back({g.target, bm25f_score_doc(g.query, g.target, idx, fx.params())});
        }
        if (retrieved.size() < 2) continue;

        lq.query = g.query;
        lq.target_id = d.at(g.target).id;
        FeatureExtractor::QueryContext ctx = fx.prepare(g.query);
        lq.candidates.clear();
        lq.candidates.reserve(retrieved.size());
        for (const ScoredDoc& s : retrieved) {
          assert(matches(g.query, d.at(s.doc)));
          lq.candidates.push_back(
              {d.at(s.doc).id, s.score, fx.extract(ctx, s.doc), s.doc == g.target ? 1 : 0});
        }
        break;
      }
      set.queries[i] = std::move(lq);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  for (const std::string& e : errors) {
    if (!e.empty()) throw NoEligibleTarget(e);
  }
  return set;
}

std::map<int, LabeledRankingSet> split_by_group(const LabeledRankingSet& s) {
  std::map<int, LabeledRankingSet> parts;
  for (const LabeledQuery& q : s.queries) parts[q.group].queries.push_back(q);
  return parts;
}

OverlapReport target_overlap(const LabeledRankingSet& a, const LabeledRankingSet& b) {
  OverlapReport r;
  std::set<std::string> targets_a;
  std::set<std::pair<std::string, std::string>> pairs_a;
  for (const LabeledQuery& q : a.queries) {
    targets_a.insert(q.target_id);
    pairs_a.emplace(query_to_record(q.query), q.target_id);
  }
  std::set<std::string> counted;
  for (const LabeledQuery& q : b.queries) {
    if (targets_a.count(q.target_id) && counted.insert(q.target_id).second) ++r.shared_targets;
    if (pairs_a.count({query_to_record(q.query), q.target_id})) ++r.shared_query_target_pairs;
  }
  return r;
}

void save_labeled_set(const LabeledRankingSet& s, const std::string& features_path,
                      const std::string& manifest_path) {
  std::ofstream features(features_path, std::ios::binary);
  if (!features) throw SchemaError("cannot write " + features_path);
  std::ofstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw SchemaError("cannot write " + manifest_path);
  for (const LabeledQuery& q : s.queries) {
    for (const LabeledCandidate& c : q.candidates) {
      features << feature_line({c.label, q.qid, c.x, c.object_id}) << '\n';
    }
    nlohmann::ordered_json j;
    j["qid"] = q.qid;
    j["group"] = q.group;
    j["target"] = q.target_id;
    j["query"] = nlohmann::ordered_json::parse(query_to_record(q.query));
    manifest << j.dump() << '\n';
  }
}

LabeledRankingSet load_labeled_set(const std::string& features_path, const std::string& manifest_path) {
  std::ifstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw MissingArtifact("query manifest not found: " + manifest_path);
  LabeledRankingSet set;
  std::map<uint32_t, size_t> by_qid;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(manifest_path + ": " + e.what());
    }
    LabeledQuery q;
    q.qid = j.at("qid").get<uint32_t>();
    q.group = j.at("group").get<int>();
    q.target_id = j.at("target").get<std::string>();
    for (const auto& [key, value] : j.at("query").items()) {
      auto dim = dim_from_name(key);
      if (!dim) throw SchemaError("unknown dimension in manifest: " + key);
      q.query.items(*dim) = value.get<std::vector<std::string>>();
    }
    by_qid[q.qid] = set.queries.size();
    set.queries.push_back(std::move(q));
  }
  for (const FeatureFileEntry& e : read_feature_file(features_path)) {
    auto it = by_qid.find(e.qid);
    if (it == by_qid.end()) throw SchemaError("feature file qid " + std::to_string(e.qid) +
                                              " missing from manifest");
    set.queries[it->second].candidates.push_back({e.object_id, 0.0, e.x, e.label});
  }
  for (const LabeledQuery& q : set.queries) {
    int positives = 0;
    for (const LabeledCandidate& c : q.candidates) positives += c.label == 1;
    if (positives != 1) {
      throw SchemaError("query " + std::to_string(q.qid) + " has " + std::to_string(positives) +
                        " positive labels");
    }
  }
  return set;
}

}  // namespace w5h
