#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "support/oracle.hpp"
#include "w5h/synthetic.hpp"
#include "w5h/topics.hpp"

using namespace w5h;
namespace fs = std::filesystem;

namespace {

Dataset disjoint_vocab_corpus(uint64_t seed, int docs_per_cluster = 50) {
  const std::vector<std::string> pool_a = {"alpha", "bravo", "charlie", "delta", "echo"};
  const std::vector<std::string> pool_b = {"xray", "yankee", "zulu", "whiskey", "victor"};
  std::mt19937_64 rng(seed);
  Dataset d;
  for (int i = 0; i < 2 * docs_per_cluster; ++i) {
    const auto& pool = i < docs_per_cluster ? pool_a : pool_b;
    TraceObject o;
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%03d", i);
    o.id = buf;
    for (int t = 0; t < 8; ++t) o.items(Dim::What).push_back(pool[rng() % pool.size()]);
    d.add(o);
  }
  d.freeze();
  return d;
}

double cluster_purity(const TopicModel& m, int docs_per_cluster) {
  int first_as_0 = 0, second_as_1 = 0;
  for (int i = 0; i < 2 * docs_per_cluster; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%03d", i);
    const int k = m.dominant_topic(buf);
    if (i < docs_per_cluster && k == 0) ++first_as_0;
    if (i >= docs_per_cluster && k == 1) ++second_as_1;
  }
  const int n = 2 * docs_per_cluster;
  const int aligned = first_as_0 + second_as_1;
  return std::max(aligned, n - aligned) / static_cast<double>(n);
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("K=1 assigns everything to topic 0") {
  Dataset d = disjoint_vocab_corpus(3, 10);
  TopicModelParams p;
  p.K = 1;
  p.iters = 5;
  TopicModel m = fit_lda(d, p);
  for (const TraceObject& o : d.objects()) CHECK(m.dominant_topic(o.id) == 0);
  CHECK(m.query_topic({"alpha"}) == 0);
}

TEST_CASE("fitting is deterministic per seed") {
  Dataset d = disjoint_vocab_corpus(5, 20);
  TopicModelParams p;
  p.K = 3;
  p.iters = 40;
  p.seed = 9;
  TopicModel a = fit_lda(d, p);
  TopicModel b = fit_lda(d, p);
  const fs::path pa = fs::temp_directory_path() / "w5h-topics-a.txt";
  const fs::path pb = fs::temp_directory_path() / "w5h-topics-b.txt";
  a.save(pa.string());
  b.save(pb.string());
  CHECK(file_bytes(pa.string()) == file_bytes(pb.string()));
  fs::remove(pa);
  fs::remove(pb);
}

TEST_CASE("count invariants hold after every sweep") {
  Dataset d = generate_synthetic_dataset(31, 100);
  TopicModelParams p;
  p.K = 4;
  p.iters = 15;
  int sweeps_seen = 0;
  fit_lda(d, p, [&](const TopicModel& m, int sweep) {
    CHECK(sweep == sweeps_seen);
    ++sweeps_seen;
    CHECK_NOTHROW(m.check_invariants());
  });
  CHECK(sweeps_seen == 15);
}

TEST_CASE("two disjoint vocabularies separate cleanly") {
  Dataset d = disjoint_vocab_corpus(7);
  TopicModelParams p;
  p.K = 2;
  p.iters = 500;
  p.seed = 1;
  TopicModel m = fit_lda(d, p);
  CHECK(cluster_purity(m, 50) >= 0.9);
}

TEST_CASE("dominant and query topics match a recount of the stored tables") {
  Dataset d = generate_synthetic_dataset(37, 120);
  TopicModelParams p;
  p.K = 5;
  p.iters = 30;
  TopicModel m = fit_lda(d, p);

  const auto dominant = testsupport::recount_dominant(m);
  for (const TraceObject& o : d.objects()) {
    if (o.items(Dim::What).empty()) continue;
    CHECK(m.dominant_topic(o.id) == dominant.at(o.id));
  }
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const TraceObject& o = d.at(rng() % d.size());
    std::vector<std::string> terms;
    for (size_t t = 0; t < o.items(Dim::What).size() && t < 3; ++t) {
      terms.push_back(o.items(Dim::What)[t]);
    }
    CHECK(m.query_topic(terms) == testsupport::recount_query_topic(m, terms));
  }

  auto props = m.topic_proportions(d.at(0).id);
  double sum = 0;
  for (double v : props) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("edge cases: empty corpus, missing objects, ties, unknown terms") {
  Dataset empty;
  TraceObject o;
  o.id = "only";
  o.items(Dim::Who) = {"someone"};  // no what terms anywhere
  empty.add(o);
  empty.freeze();
  TopicModelParams p;
  p.K = 2;
  p.iters = 2;
  CHECK_THROWS_AS(fit_lda(empty, p), EmptyCorpus);

  Dataset d = disjoint_vocab_corpus(11, 10);
  TopicModel m = fit_lda(d, p);
  CHECK_THROWS_AS(m.dominant_topic("not-in-corpus"), ObjectNotInCorpus);
  CHECK_FALSE(m.query_topic({"unknownword", "alsounknown"}).has_value());

  // hand-crafted model: uniform doc-topic tie resolves to topic 0,
  // and a term concentrated in topic 1 maps there
  const fs::path path = fs::temp_directory_path() / "w5h-topics-tie.txt";
  {
    std::ofstream out(path);
    out << "w5h-topics v1\n";
    out << "K 2 alpha 1 beta 0.01 seed 1 iters 1\n";
    out << "V 2 D 1\n";
    out << "worda\nwordb\n";
    out << "doc1\t4\n";
    out << "2 1\n";   // n_wk worda
    out << "0 1\n";   // n_wk wordb
    out << "2 2\n";   // n_kd doc1 (tie)
  }
  TopicModel tie = TopicModel::load(path.string());
  CHECK(tie.dominant_topic("doc1") == 0);
  CHECK(tie.query_topic({"wordb"}) == 1);
  CHECK(tie.query_topic({"worda"}) == 0);
  fs::remove(path);
}

TEST_CASE("model persistence is bit-exact") {
  Dataset d = disjoint_vocab_corpus(13, 15);
  TopicModelParams p;
  p.K = 3;
  p.iters = 25;
  p.seed = 2;
  TopicModel m = fit_lda(d, p);
  const fs::path pa = fs::temp_directory_path() / "w5h-topics-p1.txt";
  const fs::path pb = fs::temp_directory_path() / "w5h-topics-p2.txt";
  m.save(pa.string());
  TopicModel loaded = TopicModel::load(pa.string());
  loaded.save(pb.string());
  CHECK(file_bytes(pa.string()) == file_bytes(pb.string()));
  CHECK(loaded.K() == m.K());
  for (const TraceObject& o : d.objects()) CHECK(loaded.dominant_topic(o.id) == m.dominant_topic(o.id));
  fs::remove(pa);
  fs::remove(pb);
}
