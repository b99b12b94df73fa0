#pragma once

#include <string>
#include <vector>

#include "w5h/index.hpp"
#include "w5h/ltr.hpp"
#include "w5h/querygen.hpp"
#include "w5h/synthetic.hpp"
#include "w5h/topics.hpp"

namespace w5h {

// One config file drives the whole pipeline. Every defaulted value is echoed
// back into the resolved dump, so a run is fully described by
// <workdir>/config.resolved.json and its hash.
struct RunConfig {
  std::string workdir = "work";
  int threads = 0;  // 0 = all hardware threads

  // corpus
  std::string corpus_kind = "synthetic";  // synthetic | maildir | records
  std::string corpus_path;                // maildir root or records file
  std::string alias_table;                // optional TSV
  uint64_t synthetic_seed = 7;
  size_t synthetic_objects = 5000;
  SyntheticProfile profile;

  Bm25Params bm25;
  TopicModelParams topics;

  // query generation
  std::vector<std::vector<std::string>> templates = {
      {"what", "who"}, {"what", "who", "when"}, {"what", "who", "when", "how"}, {"what", "who", "how"}};
  int values_per_dim = 1;
  bool tf_weighted_what = true;
  size_t list_size = 100;
  size_t train_queries = 1000;
  uint64_t train_seed = 11;
  size_t eval_queries = 200;
  uint64_t eval_seed = 22;

  // training
  std::vector<TrainConfig> grid = {TrainConfig{}};
  int cv_folds = 5;

  // evaluation
  int eval_cutoff = 50;

  std::vector<QueryTemplate> resolved_templates() const;  // throws ConfigError

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json_text() const;  // fully resolved, stable field order
  std::string hash() const;          // over to_json_text()
};

}  // namespace w5h
