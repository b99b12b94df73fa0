#pragma once

#include <string>
#include <vector>

#include "w5h/config.hpp"
#include "w5h/eval.hpp"

namespace w5h {

// Workdir artifact layout. Stages check the manifest so a stale or missing
// upstream artifact fails fast instead of silently mixing runs.
struct Paths {
  std::string workdir;
  explicit Paths(std::string wd) : workdir(std::move(wd)) {}

  std::string resolved_config() const { return workdir + "/config.resolved.json"; }
  std::string manifest() const { return workdir + "/manifest.json"; }
  std::string dataset() const { return workdir + "/dataset.jsonl"; }
  std::string ingest_stats() const { return workdir + "/ingest.stats.json"; }
  std::string index_file() const { return workdir + "/index.txt"; }
  std::string topics_file() const { return workdir + "/topics.txt"; }
  std::string features(const std::string& split) const { return workdir + "/" + split + ".features.txt"; }
  std::string query_manifest(const std::string& split) const {
    return workdir + "/" + split + ".queries.jsonl";
  }
  std::string overlap() const { return workdir + "/overlap.json"; }
  std::string model() const { return workdir + "/model.txt"; }
  std::string train_log() const { return workdir + "/train.log.json"; }
  std::string cv_log() const { return workdir + "/cv.json"; }
  std::string metrics() const { return workdir + "/metrics.json"; }
  std::string report() const { return workdir + "/report.txt"; }
};

void run_ingest(const RunConfig& cfg);
void run_index(const RunConfig& cfg);
void run_topics(const RunConfig& cfg);
void run_gen_queries(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);
// Renders report.txt (and returns the text) from the existing metrics file.
std::string run_report(const RunConfig& cfg);

// "what:lunch who:john smith when:2018" -> normalized QueryObject; bare
// tokens extend the value of the dimension introduced last.
QueryObject parse_query_string(const std::string& query);

struct SearchHit {
  std::string id;
  double score = 0;
  std::string context;  // short how/when/what summary
};
std::vector<SearchHit> run_search(const RunConfig& cfg, const std::string& query,
                                  const std::string& method, size_t top_k);

// Renders the metrics JSON (as written to metrics.json) as the plain-text
// comparison report.
std::string render_metrics_text(const std::string& metrics_json_text);

}  // namespace w5h
