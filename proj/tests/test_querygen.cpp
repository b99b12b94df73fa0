#include <doctest.h>

#include <filesystem>
#include <set>

#include "w5h/querygen.hpp"
#include "w5h/synthetic.hpp"
#include "w5h/textnorm.hpp"

using namespace w5h;
namespace fs = std::filesystem;

namespace {

struct Pipeline {
  Dataset data;
  InvertedIndex idx;
  TopicModel model;
  FeatureExtractor fx;

  explicit Pipeline(Dataset d)
      : data(std::move(d)),
        idx(InvertedIndex::build(data)),
        model(fit_lda(data, TopicModelParams{4, -1, 0.01, 30, 3})),
        fx(data, idx, model, Bm25Params{}) {}
};

}  // namespace

TEST_CASE("generated queries sample from the target and always match it") {
  Dataset d = generate_synthetic_dataset(3, 200);
  const QueryTemplate tpl = default_templates()[0];  // {what, who}, v=1
  for (uint64_t seed = 0; seed < 20; ++seed) {
    GeneratedQuery g = generate_query(d, tpl, seed);
    const TraceObject& target = d.at(g.target);
    REQUIRE(g.query.items(Dim::What).size() == 1);
    REQUIRE(g.query.items(Dim::Who).size() == 1);
    CHECK(g.query.items(Dim::When).empty());
    const std::string& term = g.query.items(Dim::What)[0];
    CHECK(term.size() >= 3);
    CHECK(target.contains(Dim::What, term));
    CHECK(target.contains(Dim::Who, g.query.items(Dim::Who)[0]));
    CHECK(matches(g.query, target));
  }
}

TEST_CASE("when sampling draws the finest granularity token") {
  Dataset d = generate_synthetic_dataset(5, 100);
  const QueryTemplate tpl = default_templates()[1];  // {what, who, when}
  for (uint64_t seed = 0; seed < 10; ++seed) {
    GeneratedQuery g = generate_query(d, tpl, seed);
    REQUIRE(g.query.items(Dim::When).size() == 1);
    CHECK(time_token_granularity(g.query.items(Dim::When)[0]) == TimeGranularity::Day);
  }
}

TEST_CASE("generation is deterministic and template dims must exist") {
  Dataset d = generate_synthetic_dataset(7, 50);
  const QueryTemplate tpl = default_templates()[2];
  GeneratedQuery a = generate_query(d, tpl, 42);
  GeneratedQuery b = generate_query(d, tpl, 42);
  CHECK(a.target == b.target);
  CHECK(query_to_record(a.query) == query_to_record(b.query));

  // no object has a where item in this corpus
  SyntheticProfile p;
  p.where_rate = 0.0;
  Dataset no_where = generate_synthetic_dataset(9, 30, p);
  QueryTemplate where_tpl;
  where_tpl.dims = dim_bit(Dim::Where);
  CHECK_THROWS_AS(generate_query(no_where, where_tpl, 1), NoEligibleTarget);
}

TEST_CASE("labeled sets have one positive per query and matching candidates") {
  Pipeline p(generate_synthetic_dataset(11, 250));
  QuerygenOptions opt;
  opt.n_queries = 24;
  opt.seed = 5;
  opt.list_size = 30;
  LabeledRankingSet set = build_labeled_set(p.fx, opt);
  REQUIRE(set.queries.size() == 24);

  for (size_t i = 0; i < set.queries.size(); ++i) {
    const LabeledQuery& q = set.queries[i];
    CHECK(q.qid == i + 1);
    CHECK(q.group == static_cast<int>(i % 4) + 1);  // round-robin templates
    CHECK(q.candidates.size() >= 2);
    CHECK(q.candidates.size() <= opt.list_size + 1);
    int positives = 0;
    bool target_present = false;
    std::set<std::string> ids;
    for (const LabeledCandidate& c : q.candidates) {
      positives += c.label;
      target_present = target_present || c.object_id == q.target_id;
      ids.insert(c.object_id);
      CHECK(matches(q.query, *p.data.find(c.object_id)));
    }
    CHECK(positives == 1);
    CHECK(target_present);
    CHECK(ids.size() == q.candidates.size());  // no duplicates
  }

  // thread independence
  opt.n_threads = 3;
  LabeledRankingSet parallel = build_labeled_set(p.fx, opt);
  REQUIRE(parallel.queries.size() == set.queries.size());
  for (size_t i = 0; i < set.queries.size(); ++i) {
    CHECK(parallel.queries[i].target_id == set.queries[i].target_id);
    REQUIRE(parallel.queries[i].candidates.size() == set.queries[i].candidates.size());
    for (size_t c = 0; c < set.queries[i].candidates.size(); ++c) {
      CHECK(parallel.queries[i].candidates[c].object_id == set.queries[i].candidates[c].object_id);
      CHECK(parallel.queries[i].candidates[c].x == set.queries[i].candidates[c].x);
    }
  }
}

TEST_CASE("split_by_group partitions the set") {
  Pipeline p(generate_synthetic_dataset(13, 150));
  QuerygenOptions opt;
  opt.n_queries = 18;
  opt.seed = 8;
  opt.list_size = 20;
  LabeledRankingSet set = build_labeled_set(p.fx, opt);
  auto parts = split_by_group(set);
  REQUIRE(parts.size() == 4);
  size_t total = 0;
  for (const auto& [group, part] : parts) {
    for (const LabeledQuery& q : part.queries) CHECK(q.group == group);
    total += part.queries.size();
  }
  CHECK(total == set.queries.size());
  // 18 queries round-robined over 4 templates: sizes 5,5,4,4
  CHECK(parts.at(1).queries.size() == 5);
  CHECK(parts.at(2).queries.size() == 5);
  CHECK(parts.at(3).queries.size() == 4);
  CHECK(parts.at(4).queries.size() == 4);

  LabeledRankingSet single;
  single.queries = {set.queries[0]};
  CHECK(split_by_group(single).size() == 1);
}

TEST_CASE("labeled sets round-trip through feature and manifest files") {
  Pipeline p(generate_synthetic_dataset(17, 120));
  QuerygenOptions opt;
  opt.n_queries = 8;
  opt.seed = 4;
  opt.list_size = 15;
  LabeledRankingSet set = build_labeled_set(p.fx, opt);

  const fs::path dir = fs::temp_directory_path();
  const std::string features = (dir / "w5h-qg-feat.txt").string();
  const std::string manifest = (dir / "w5h-qg-man.jsonl").string();
  save_labeled_set(set, features, manifest);
  LabeledRankingSet back = load_labeled_set(features, manifest);

  REQUIRE(back.queries.size() == set.queries.size());
  for (size_t i = 0; i < set.queries.size(); ++i) {
    CHECK(back.queries[i].qid == set.queries[i].qid);
    CHECK(back.queries[i].group == set.queries[i].group);
    CHECK(back.queries[i].target_id == set.queries[i].target_id);
    CHECK(query_to_record(back.queries[i].query) == query_to_record(set.queries[i].query));
    REQUIRE(back.queries[i].candidates.size() == set.queries[i].candidates.size());
    for (size_t c = 0; c < set.queries[i].candidates.size(); ++c) {
      CHECK(back.queries[i].candidates[c].x == set.queries[i].candidates[c].x);
      CHECK(back.queries[i].candidates[c].label == set.queries[i].candidates[c].label);
    }
  }
  fs::remove(features);
  fs::remove(manifest);
}

TEST_CASE("target overlap report") {
  Pipeline p(generate_synthetic_dataset(19, 100));
  QuerygenOptions a, b;
  a.n_queries = b.n_queries = 10;
  a.seed = 1;
  b.seed = 2;
  a.list_size = b.list_size = 10;
  LabeledRankingSet sa = build_labeled_set(p.fx, a);
  LabeledRankingSet sb = build_labeled_set(p.fx, b);
  OverlapReport self = target_overlap(sa, sa);
  CHECK(self.shared_query_target_pairs == sa.queries.size());
  OverlapReport cross = target_overlap(sa, sb);
  CHECK(cross.shared_targets <= sb.queries.size());
}
