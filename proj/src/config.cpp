#include "w5h/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace w5h {

// ordered_json everywhere: config echo must preserve map order (sources) so
// the resolved dump and its hash are stable across parse/dump cycles
using json = nlohmann::ordered_json;
using ojson = nlohmann::ordered_json;

std::vector<QueryTemplate> RunConfig::resolved_templates() const {
  if (templates.empty()) throw ConfigError("querygen.templates must not be empty");
  std::vector<QueryTemplate> out;
  for (const auto& dims : templates) {
    QueryTemplate t;
    t.values_per_dim = values_per_dim;
    for (const std::string& name : dims) {
      auto d = dim_from_name(name);
      if (!d || *d == Dim::Why) throw ConfigError("bad template dimension: " + name);
      t.dims |= dim_bit(*d);
    }
    if (t.dims == 0) throw ConfigError("empty template");
    out.push_back(t);
  }
  return out;
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key \"" + key + "\" in " + where);
  }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"workdir", "threads", "corpus", "index", "topics", "querygen", "train", "eval"},
             "config root");

  RunConfig c;
  read_field(j, "workdir", c.workdir);
  read_field(j, "threads", c.threads);

  if (j.contains("corpus")) {
    const json& jc = j["corpus"];
    check_keys(jc, {"kind", "path", "alias_table", "synthetic"}, "corpus");
    read_field(jc, "kind", c.corpus_kind);
    read_field(jc, "path", c.corpus_path);
    read_field(jc, "alias_table", c.alias_table);
    if (c.corpus_kind != "synthetic" && c.corpus_kind != "maildir" && c.corpus_kind != "records") {
      throw ConfigError("corpus.kind must be synthetic, maildir or records");
    }
    if (c.corpus_kind != "synthetic" && c.corpus_path.empty()) {
      throw ConfigError("corpus.path required for kind " + c.corpus_kind);
    }
    if (jc.contains("synthetic")) {
      const json& js = jc["synthetic"];
      check_keys(js,
                 {"seed", "objects", "people", "clique_size", "topics", "words_per_topic",
                  "common_words", "sources", "year_min", "year_max", "body_words_min",
                  "body_words_max", "topic_affinity", "common_word_rate", "where_rate"},
                 "corpus.synthetic");
      read_field(js, "seed", c.synthetic_seed);
      read_field(js, "objects", c.synthetic_objects);
      read_field(js, "people", c.profile.people);
      read_field(js, "clique_size", c.profile.clique_size);
      read_field(js, "topics", c.profile.topics);
      read_field(js, "words_per_topic", c.profile.words_per_topic);
      read_field(js, "common_words", c.profile.common_words);
      read_field(js, "year_min", c.profile.year_min);
      read_field(js, "year_max", c.profile.year_max);
      read_field(js, "body_words_min", c.profile.body_words_min);
      read_field(js, "body_words_max", c.profile.body_words_max);
      read_field(js, "topic_affinity", c.profile.topic_affinity);
      read_field(js, "common_word_rate", c.profile.common_word_rate);
      read_field(js, "where_rate", c.profile.where_rate);
      if (js.contains("sources")) {
        c.profile.sources.clear();
        for (const auto& [tag, prop] : js["sources"].items()) {
          c.profile.sources.emplace_back(tag, prop.get<double>());
        }
      }
    }
  }

  if (j.contains("index")) {
    const json& ji = j["index"];
    check_keys(ji, {"k1", "b", "weights"}, "index");
    read_field(ji, "k1", c.bm25.k1);
    read_field(ji, "b", c.bm25.b);
    if (ji.contains("weights")) {
      for (const auto& [name, w] : ji["weights"].items()) {
        auto d = dim_from_name(name);
        if (!d || *d == Dim::Why) throw ConfigError("bad field weight dimension: " + name);
        c.bm25.field_weights[static_cast<size_t>(*d)] = w.get<double>();
      }
    }
    c.bm25.validate();
  }

  if (j.contains("topics")) {
    const json& jt = j["topics"];
    check_keys(jt, {"k", "alpha", "beta", "iters", "seed"}, "topics");
    read_field(jt, "k", c.topics.K);
    read_field(jt, "alpha", c.topics.alpha);
    read_field(jt, "beta", c.topics.beta);
    read_field(jt, "iters", c.topics.iters);
    read_field(jt, "seed", c.topics.seed);
    if (c.topics.K < 1 || c.topics.iters < 1) throw ConfigError("topics.k and topics.iters must be >= 1");
  }

  if (j.contains("querygen")) {
    const json& jq = j["querygen"];
    check_keys(jq,
               {"templates", "values_per_dim", "tf_weighted_what", "list_size", "train_queries",
                "train_seed", "eval_queries", "eval_seed"},
               "querygen");
    read_field(jq, "templates", c.templates);
    read_field(jq, "values_per_dim", c.values_per_dim);
    read_field(jq, "tf_weighted_what", c.tf_weighted_what);
    read_field(jq, "list_size", c.list_size);
    read_field(jq, "train_queries", c.train_queries);
    read_field(jq, "train_seed", c.train_seed);
    read_field(jq, "eval_queries", c.eval_queries);
    read_field(jq, "eval_seed", c.eval_seed);
    if (c.list_size < 2) throw ConfigError("querygen.list_size must be >= 2");
    c.resolved_templates();  // validate
  }

  if (j.contains("train")) {
    const json& jt = j["train"];
    check_keys(jt, {"grid", "cv_folds", "seed", "metric_cutoff", "sigma"}, "train");
    TrainConfig base;
    read_field(jt, "seed", base.seed);
    read_field(jt, "metric_cutoff", base.metric_cutoff);
    read_field(jt, "sigma", base.sigma);
    read_field(jt, "cv_folds", c.cv_folds);
    if (jt.contains("grid")) {
      c.grid.clear();
      for (const json& je : jt["grid"]) {
        check_keys(je, {"trees", "leaves", "mls", "shrinkage"}, "train.grid entry");
        TrainConfig t = base;
        read_field(je, "trees", t.trees);
        read_field(je, "leaves", t.leaves);
        read_field(je, "mls", t.min_leaf_support);
        read_field(je, "shrinkage", t.shrinkage);
        if (t.trees < 1 || t.leaves < 2 || t.min_leaf_support < 1 || t.shrinkage <= 0) {
          throw ConfigError("bad train.grid entry");
        }
        c.grid.push_back(t);
      }
      if (c.grid.empty()) throw ConfigError("train.grid must not be empty");
    } else {
      c.grid = {base};
    }
    if (c.cv_folds < 2) throw ConfigError("train.cv_folds must be >= 2");
  }

  if (j.contains("eval")) {
    const json& je = j["eval"];
    check_keys(je, {"cutoff"}, "eval");
    read_field(je, "cutoff", c.eval_cutoff);
    if (c.eval_cutoff < 1) throw ConfigError("eval.cutoff must be >= 1");
  }

  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
  ojson j;
  j["workdir"] = workdir;
  j["threads"] = threads;

  ojson corpus;
  corpus["kind"] = corpus_kind;
  corpus["path"] = corpus_path;
  corpus["alias_table"] = alias_table;
  ojson synth;
  synth["seed"] = synthetic_seed;
  synth["objects"] = synthetic_objects;
  synth["people"] = profile.people;
  synth["clique_size"] = profile.clique_size;
  synth["topics"] = profile.topics;
  synth["words_per_topic"] = profile.words_per_topic;
  synth["common_words"] = profile.common_words;
  ojson sources;
  for (const auto& [tag, prop] : profile.sources) sources[tag] = prop;
  synth["sources"] = sources;
  synth["year_min"] = profile.year_min;
  synth["year_max"] = profile.year_max;
  synth["body_words_min"] = profile.body_words_min;
  synth["body_words_max"] = profile.body_words_max;
  synth["topic_affinity"] = profile.topic_affinity;
  synth["common_word_rate"] = profile.common_word_rate;
  synth["where_rate"] = profile.where_rate;
  corpus["synthetic"] = synth;
  j["corpus"] = corpus;

  ojson index;
  index["k1"] = bm25.k1;
  index["b"] = bm25.b;
  ojson weights;
  for (Dim d : kFeatureDims) {
    weights[std::string(dim_name(d))] = bm25.field_weights[static_cast<size_t>(d)];
  }
  index["weights"] = weights;
  j["index"] = index;

  ojson topics_j;
  topics_j["k"] = topics.K;
  topics_j["alpha"] = topics.alpha;
  topics_j["beta"] = topics.beta;
  topics_j["iters"] = topics.iters;
  topics_j["seed"] = topics.seed;
  j["topics"] = topics_j;

  ojson querygen;
  querygen["templates"] = templates;
  querygen["values_per_dim"] = values_per_dim;
  querygen["tf_weighted_what"] = tf_weighted_what;
  querygen["list_size"] = list_size;
  querygen["train_queries"] = train_queries;
  querygen["train_seed"] = train_seed;
  querygen["eval_queries"] = eval_queries;
  querygen["eval_seed"] = eval_seed;
  j["querygen"] = querygen;

  ojson train;
  ojson grid_j = ojson::array();
  for (const TrainConfig& t : grid) {
    ojson e;
    e["trees"] = t.trees;
    e["leaves"] = t.leaves;
    e["mls"] = t.min_leaf_support;
    e["shrinkage"] = t.shrinkage;
    grid_j.push_back(e);
  }
  train["grid"] = grid_j;
  train["cv_folds"] = cv_folds;
  train["seed"] = grid.empty() ? 1 : grid[0].seed;
  train["metric_cutoff"] = grid.empty() ? 50 : grid[0].metric_cutoff;
  train["sigma"] = grid.empty() ? 1.0 : grid[0].sigma;
  j["train"] = train;

  ojson eval;
  eval["cutoff"] = eval_cutoff;
  j["eval"] = eval;

  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json_text())); }

}  // namespace w5h
