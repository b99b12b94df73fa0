#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "w5h/index.hpp"
#include "w5h/querygen.hpp"
#include "w5h/synthetic.hpp"

using namespace w5h;
namespace fs = std::filesystem;

namespace {

// a: [lunch, meeting, notes]  b: [lunch, lunch, budget, report]  c: [hiking, trip]
Dataset toy_corpus() {
  Dataset d;
  TraceObject a, b, c;
  a.id = "a";
  a.items(Dim::What) = {"lunch", "meeting", "notes"};
  b.id = "b";
  b.items(Dim::What) = {"lunch", "lunch", "budget", "report"};
  c.id = "c";
  c.items(Dim::What) = {"hiking", "trip"};
  d.add(a);
  d.add(b);
  d.add(c);
  d.freeze();
  return d;
}

// two-field corpus for the bm25f hand check
Dataset two_field_corpus() {
  Dataset d;
  TraceObject a, b, c;
  a.id = "a";
  a.items(Dim::What) = {"lunch", "meeting"};
  a.items(Dim::Who) = {"john smith"};
  b.id = "b";
  b.items(Dim::What) = {"lunch"};
  b.items(Dim::Who) = {"alice jones", "john smith"};
  c.id = "c";
  c.items(Dim::What) = {"budget"};
  c.items(Dim::Who) = {"alice jones"};
  d.add(a);
  d.add(b);
  d.add(c);
  d.freeze();
  return d;
}

QueryObject what_query(std::vector<std::string> terms) {
  QueryObject q;
  q.items(Dim::What) = std::move(terms);
  return q;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("index statistics match hand counts on the toy corpus") {
  Dataset d = toy_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  CHECK(idx.doc_count() == 3);
  const int all = InvertedIndex::kAllField;
  CHECK(idx.field_len(0, all) == 3);
  CHECK(idx.field_len(1, all) == 4);
  CHECK(idx.field_len(2, all) == 2);
  CHECK(idx.total_len(all) == 9);
  CHECK(idx.avg_len(all) == doctest::Approx(3.0));
  CHECK(idx.doc_freq("lunch", all) == 2);
  CHECK(idx.doc_freq("budget", all) == 1);
  CHECK(idx.doc_freq("nope", all) == 0);
  CHECK(idx.term_freq("lunch", 1, all) == 2);
  CHECK(idx.term_freq("lunch", 2, all) == 0);
  // integer length accounting: sum of lens equals N * avglen exactly
  CHECK(static_cast<double>(idx.total_len(all)) == idx.doc_count() * idx.avg_len(all));
}

TEST_CASE("empty dataset index") {
  Dataset d;
  d.freeze();
  InvertedIndex idx = InvertedIndex::build(d);
  CHECK(idx.doc_count() == 0);
  CHECK(idx.postings("lunch", InvertedIndex::kAllField) == nullptr);
  CHECK(retrieve_candidates(what_query({"lunch"}), idx, Bm25Params{}).empty());
}

TEST_CASE("bm25 matches the frozen hand computation") {
  Dataset d = toy_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  CHECK(bm25_score(what_query({"lunch"}), "a", idx, p) ==
        doctest::Approx(0.21363801329351617).epsilon(1e-9));
  CHECK(bm25_score(what_query({"lunch"}), "b", idx, p) ==
        doctest::Approx(0.26857350242613465).epsilon(1e-9));
  CHECK(bm25_score(what_query({"budget"}), "b", idx, p) ==
        doctest::Approx(0.3923317012046905).epsilon(1e-9));
  // no overlap scores zero
  CHECK(bm25_score(what_query({"zzz"}), "a", idx, p) == 0.0);
  // duplicated query terms count twice
  CHECK(bm25_score(what_query({"lunch", "lunch"}), "b", idx, p) ==
        doctest::Approx(0.5371470048522693).epsilon(1e-9));
  CHECK_THROWS_AS(bm25_score(what_query({"lunch"}), "nope", idx, p), UnknownObject);
}

TEST_CASE("bm25f equals bm25 on a single-field corpus with unit weights") {
  Dataset d = toy_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  for (const char* id : {"a", "b", "c"}) {
    for (auto& terms : std::vector<std::vector<std::string>>{{"lunch"}, {"budget", "trip"}, {"hiking"}}) {
      CHECK(bm25f_score(what_query(terms), id, idx, p) ==
            doctest::Approx(bm25_score(what_query(terms), id, idx, p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("bm25f matches the frozen two-field hand computation") {
  Dataset d = two_field_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  p.field_weights[static_cast<size_t>(Dim::Who)] = 2.0;
  QueryObject q;
  q.items(Dim::What) = {"lunch"};
  q.items(Dim::Who) = {"john smith"};
  CHECK(bm25f_score(q, "a", idx, p) == doctest::Approx(0.49332868647641825).epsilon(1e-9));
  CHECK(bm25f_score(q, "b", idx, p) == doctest::Approx(0.4955127563402242).epsilon(1e-9));
  CHECK(bm25f_score(q, "c", idx, p) == 0.0);
}

TEST_CASE("query dimension scores only against its own field") {
  Dataset d = two_field_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  QueryObject q;
  q.items(Dim::Who) = {"lunch"};  // present as a what term, never as a who entity
  CHECK(bm25f_score(q, "a", idx, p) == 0.0);
}

TEST_CASE("bm25f is monotone in the weight of a matched field") {
  Dataset d = two_field_corpus();
  InvertedIndex idx = InvertedIndex::build(d);
  QueryObject q;
  q.items(Dim::Who) = {"john smith"};
  double prev = -1;
  for (double w : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    Bm25Params p;
    p.field_weights[static_cast<size_t>(Dim::Who)] = w;
    const double s = bm25f_score(q, "a", idx, p);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("retrieval equals a brute-force matches() scan") {
  Dataset d = generate_synthetic_dataset(19, 300);
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    GeneratedQuery g = generate_query(d, default_templates()[seed % 4], derive_seed(99, seed));
    auto results = retrieve_candidates(g.query, idx, p, d.size());

    std::vector<std::string> got;
    for (const ScoredDoc& s : results) got.push_back(idx.doc_id(s.doc));
    std::vector<std::string> want;
    for (const TraceObject& o : d.objects()) {
      if (matches(g.query, o)) want.push_back(o.id);
    }
    std::sort(got.begin(), got.end());
    CHECK(got == want);  // want is already in id order

    // target is always among the candidates before truncation
    bool has_target = false;
    for (const ScoredDoc& s : results) has_target = has_target || s.doc == g.target;
    CHECK(has_target);

    // ranking is by (score desc, id asc)
    for (size_t i = 1; i < results.size(); ++i) {
      const bool ordered = results[i - 1].score > results[i].score ||
                           (results[i - 1].score == results[i].score &&
                            results[i - 1].doc < results[i].doc);
      CHECK(ordered);
    }

    // cap=1 returns the single best
    auto top1 = retrieve_candidates(g.query, idx, p, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].doc == results[0].doc);
  }
}

TEST_CASE("index persistence round-trips and rebuilds identically") {
  Dataset d = generate_synthetic_dataset(23, 120);
  InvertedIndex idx = InvertedIndex::build(d);
  const fs::path path = fs::temp_directory_path() / "w5h-index-test.txt";
  idx.save(path.string());
  InvertedIndex idx2 = InvertedIndex::load(path.string());

  const fs::path path2 = fs::temp_directory_path() / "w5h-index-test2.txt";
  idx2.save(path2.string());
  CHECK(file_bytes(path.string()) == file_bytes(path2.string()));

  // rebuild from the same dataset is byte-identical
  InvertedIndex idx3 = InvertedIndex::build(d);
  const fs::path path3 = fs::temp_directory_path() / "w5h-index-test3.txt";
  idx3.save(path3.string());
  CHECK(file_bytes(path.string()) == file_bytes(path3.string()));

  Bm25Params p;
  GeneratedQuery g = generate_query(d, default_templates()[1], 5);
  CHECK(bm25f_score_doc(g.query, g.target, idx2, p) ==
        bm25f_score_doc(g.query, g.target, idx, p));
  fs::remove(path);
  fs::remove(path2);
  fs::remove(path3);
}

TEST_CASE("scores are finite and non-negative") {
  Dataset d = generate_synthetic_dataset(29, 150);
  InvertedIndex idx = InvertedIndex::build(d);
  Bm25Params p;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    GeneratedQuery g = generate_query(d, default_templates()[2], derive_seed(7, seed));
    for (const ScoredDoc& s : retrieve_candidates(g.query, idx, p, 50)) {
      CHECK(std::isfinite(s.score));
      CHECK(s.score >= 0.0);
    }
  }
}
