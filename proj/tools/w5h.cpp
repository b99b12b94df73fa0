#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "w5h/pipeline.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 missing artifact, 4 data error
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kMissingArtifact = 3;
constexpr int kDataError = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"w5h: frequency-based learning-to-rank over six-dimension personal traces"};
  app.require_subcommand(1);

  std::string config_path;
  std::string workdir_override;
  int threads_override = -1;
  app.add_option("-c,--config", config_path, "pipeline config file (JSON)")->required();
  app.add_option("--workdir", workdir_override, "override config workdir");
  app.add_option("--threads", threads_override, "override config threads");

  auto* ingest = app.add_subcommand("ingest", "parse/generate the corpus into a frozen dataset");
  auto* index = app.add_subcommand("index", "build the per-dimension inverted index");
  auto* topics = app.add_subcommand("topics", "fit the LDA topic model");
  auto* gen = app.add_subcommand("gen-queries", "generate labeled train/eval query sets");
  auto* train = app.add_subcommand("train", "train the LambdaMART ranker (with CV when a grid is given)");
  auto* evaluate = app.add_subcommand("evaluate", "compare bm25 / bm25f / w5h-l2r and write metrics");
  auto* report = app.add_subcommand("report", "re-render the report from existing metrics");

  auto* search = app.add_subcommand("search", "one-shot query against the indexed corpus");
  std::string query_string, method = "bm25f";
  size_t top_k = 10;
  search->add_option("-q,--query", query_string, "query, e.g. \"what:lunch who:john when:2018\"")
      ->required();
  search->add_option("-m,--method", method, "bm25 | bm25f | w5h-l2r");
  search->add_option("-k,--top", top_k, "number of results");

  CLI11_PARSE(app, argc, argv);

  try {
    w5h::RunConfig cfg = w5h::RunConfig::from_file(config_path);
    if (!workdir_override.empty()) cfg.workdir = workdir_override;
    if (threads_override >= 0) cfg.threads = threads_override;

    if (ingest->parsed()) {
      w5h::run_ingest(cfg);
      std::cout << "ingest: wrote " << w5h::Paths(cfg.workdir).dataset() << "\n";
    } else if (index->parsed()) {
      w5h::run_index(cfg);
      std::cout << "index: wrote " << w5h::Paths(cfg.workdir).index_file() << "\n";
    } else if (topics->parsed()) {
      w5h::run_topics(cfg);
      std::cout << "topics: wrote " << w5h::Paths(cfg.workdir).topics_file() << "\n";
    } else if (gen->parsed()) {
      w5h::run_gen_queries(cfg);
      std::cout << "gen-queries: wrote train/eval feature files in " << cfg.workdir << "\n";
    } else if (train->parsed()) {
      w5h::run_train(cfg);
      std::cout << "train: wrote " << w5h::Paths(cfg.workdir).model() << "\n";
    } else if (evaluate->parsed()) {
      w5h::run_evaluate(cfg);
      std::cout << "evaluate: wrote " << w5h::Paths(cfg.workdir).metrics() << "\n";
    } else if (report->parsed()) {
      std::cout << w5h::run_report(cfg);
    } else if (search->parsed()) {
      auto hits = w5h::run_search(cfg, query_string, method, top_k);
      for (size_t i = 0; i < hits.size(); ++i) {
        std::printf("%2zu. %-24s %12.6f  %s\n", i + 1, hits[i].id.c_str(), hits[i].score,
                    hits[i].context.c_str());
      }
      if (hits.empty()) std::cout << "(no results)\n";
    }
    return kOk;
  } catch (const w5h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const w5h::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}
