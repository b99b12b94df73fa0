// Benchmark of the OpenMP kernels against their single-thread runs. The two
// paths must produce identical artifacts; timing differences are informative
// only (speedups need more than one hardware thread).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "w5h/eval.hpp"
#include "w5h/pipeline.hpp"
#include "w5h/synthetic.hpp"

using namespace w5h;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string labeled_set_bytes(const LabeledRankingSet& s) {
  std::ostringstream out;
  for (const LabeledQuery& q : s.queries) {
    for (const LabeledCandidate& c : q.candidates) {
      out << feature_line({c.label, q.qid, c.x, c.object_id}) << '\n';
    }
  }
  return out.str();
}

std::string model_bytes(const Ensemble& e) {
  std::string path = "bench.model.tmp";
  e.save(path);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::remove(path.c_str());
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  size_t n_objects = 4000;
  size_t n_queries = 400;
  if (argc > 1) n_objects = std::stoul(argv[1]);
  if (argc > 2) n_queries = std::stoul(argv[2]);

  int hw_threads = 1;
#ifdef _OPENMP
  hw_threads = omp_get_max_threads();
#endif
  std::printf("corpus=%zu objects, %zu queries, comparing 1 vs %d threads\n\n", n_objects, n_queries,
              hw_threads);

  SyntheticProfile profile;
  Dataset d = generate_synthetic_dataset(99, n_objects, profile);
  InvertedIndex idx = InvertedIndex::build(d);
  TopicModelParams tp;
  tp.K = 12;
  tp.iters = 60;
  tp.seed = 5;
  TopicModel topics = fit_lda(d, tp);
  FeatureExtractor fx(d, idx, topics, Bm25Params{});

  int failures = 0;
  auto check = [&](const char* what, bool same, double serial_ms, double parallel_ms) {
    std::printf("%-22s serial %9.1f ms   parallel %9.1f ms   speedup %.2fx   outputs %s\n", what,
                serial_ms, parallel_ms, serial_ms / parallel_ms, same ? "identical" : "DIFFER");
    if (!same) ++failures;
  };

  // feature extraction / labeled-set construction
  QuerygenOptions opt;
  opt.n_queries = n_queries;
  opt.seed = 17;
  opt.list_size = 100;
  LabeledRankingSet serial_set, parallel_set;
  double t_serial, t_parallel;
  {
    opt.n_threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    serial_set = build_labeled_set(fx, opt);
    t_serial = ms_since(t0);
  }
  {
    opt.n_threads = hw_threads;
    auto t0 = std::chrono::steady_clock::now();
    parallel_set = build_labeled_set(fx, opt);
    t_parallel = ms_since(t0);
  }
  check("labeled-set build", labeled_set_bytes(serial_set) == labeled_set_bytes(parallel_set), t_serial,
        t_parallel);

  // LambdaMART training (lambda pass + split search)
  TrainConfig tc;
  tc.trees = 20;
  tc.leaves = 15;
  tc.min_leaf_support = 10;
  tc.shrinkage = 0.1;
  Ensemble serial_model, parallel_model;
  {
    tc.n_threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    serial_model = train_lambdamart(serial_set, tc);
    t_serial = ms_since(t0);
  }
  {
    tc.n_threads = hw_threads;
    auto t0 = std::chrono::steady_clock::now();
    parallel_model = train_lambdamart(serial_set, tc);
    t_parallel = ms_since(t0);
  }
  check("lambdamart train", model_bytes(serial_model) == model_bytes(parallel_model), t_serial,
        t_parallel);

  // method comparison
  EvalOptions eo;
  std::string serial_metrics, parallel_metrics;
  {
    eo.n_threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    serial_metrics = report_to_json(compare_methods(serial_set, idx, serial_model, Bm25Params{}, eo),
                                    serial_model, "bench");
    t_serial = ms_since(t0);
  }
  {
    eo.n_threads = hw_threads;
    auto t0 = std::chrono::steady_clock::now();
    parallel_metrics = report_to_json(compare_methods(serial_set, idx, serial_model, Bm25Params{}, eo),
                                      serial_model, "bench");
    t_parallel = ms_since(t0);
  }
  check("method evaluation", serial_metrics == parallel_metrics, t_serial, t_parallel);

  if (failures) {
    std::printf("\n%d kernel(s) diverged between serial and parallel runs\n", failures);
    return 1;
  }
  std::printf("\nall parallel kernels match their serial reference\n");
  return 0;
}
