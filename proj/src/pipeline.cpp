#include "w5h/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "w5h/ingest.hpp"
#include "w5h/textnorm.hpp"

namespace fs = std::filesystem;

namespace w5h {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void begin_stage(const RunConfig& cfg) {
  fs::create_directories(cfg.workdir);
  write_text(Paths(cfg.workdir).resolved_config(), cfg.to_json_text());
}

void mark_stage(const RunConfig& cfg, const std::string& stage) {
  const Paths paths(cfg.workdir);
  ojson m;
  if (fs::exists(paths.manifest())) {
    m = ojson::parse(read_text(paths.manifest()));
  } else {
    m["stages"] = ojson::object();
  }
  m["stages"][stage] = cfg.hash();
  write_text(paths.manifest(), m.dump(2) + "\n");
}

void require_stage(const RunConfig& cfg, const std::string& stage) {
  const Paths paths(cfg.workdir);
  if (!fs::exists(paths.manifest())) {
    throw MissingArtifact("no manifest in " + cfg.workdir + "; run `w5h " + stage + "` first");
  }
  json m = json::parse(read_text(paths.manifest()));
  if (!m.contains("stages") || !m["stages"].contains(stage)) {
    throw MissingArtifact("stage \"" + stage + "\" has not been run in " + cfg.workdir +
                          "; run `w5h " + stage + "` first");
  }
  if (m["stages"][stage].get<std::string>() != cfg.hash()) {
    throw MissingArtifact("artifacts of stage \"" + stage +
                          "\" were built with a different config; re-run `w5h " + stage + "`");
  }
}

AliasTable maybe_aliases(const RunConfig& cfg) {
  if (cfg.alias_table.empty()) return {};
  return load_alias_table(cfg.alias_table);
}

Dataset load_frozen_dataset(const RunConfig& cfg) {
  return load_dataset(Paths(cfg.workdir).dataset());
}

QuerygenOptions querygen_options(const RunConfig& cfg, bool train_split) {
  QuerygenOptions opt;
  opt.n_queries = train_split ? cfg.train_queries : cfg.eval_queries;
  opt.seed = train_split ? cfg.train_seed : cfg.eval_seed;
  opt.templates = cfg.resolved_templates();
  opt.list_size = cfg.list_size;
  opt.tf_weighted_what = cfg.tf_weighted_what;
  opt.n_threads = cfg.threads;
  return opt;
}

}  // namespace

void run_ingest(const RunConfig& cfg) {
  begin_stage(cfg);
  const Paths paths(cfg.workdir);
  AliasTable aliases = maybe_aliases(cfg);
  IngestStats stats;

  Dataset d;
  if (cfg.corpus_kind == "synthetic") {
    d = generate_synthetic_dataset(cfg.synthetic_seed, cfg.synthetic_objects, cfg.profile);
    stats.parsed = d.size();
  } else if (cfg.corpus_kind == "maildir") {
    d = ingest_maildir(cfg.corpus_path, aliases.empty() ? nullptr : &aliases, &stats, cfg.threads);
  } else if (cfg.corpus_kind == "records") {
    d = load_dataset(cfg.corpus_path, aliases.empty() ? nullptr : &aliases);
    stats.parsed = d.size();
  } else {
    throw ConfigError("unknown corpus kind: " + cfg.corpus_kind);
  }

  save_dataset(d, paths.dataset());
  ojson s;
  s["objects"] = d.size();
  s["parsed"] = stats.parsed;
  s["skipped"] = stats.skipped;
  s["duplicates"] = stats.duplicates;
  s["config_hash"] = cfg.hash();
  write_text(paths.ingest_stats(), s.dump(2) + "\n");
  mark_stage(cfg, "ingest");
}

void run_index(const RunConfig& cfg) {
  begin_stage(cfg);
  require_stage(cfg, "ingest");
  const Paths paths(cfg.workdir);
  Dataset d = load_frozen_dataset(cfg);
  InvertedIndex idx = InvertedIndex::build(d);
  idx.save(paths.index_file());
  mark_stage(cfg, "index");
}

void run_topics(const RunConfig& cfg) {
  begin_stage(cfg);
  require_stage(cfg, "ingest");
  const Paths paths(cfg.workdir);
  Dataset d = load_frozen_dataset(cfg);
  TopicModel m = fit_lda(d, cfg.topics);
  m.save(paths.topics_file());
  mark_stage(cfg, "topics");
}

void run_gen_queries(const RunConfig& cfg) {
  begin_stage(cfg);
  require_stage(cfg, "ingest");
  require_stage(cfg, "index");
  require_stage(cfg, "topics");
  const Paths paths(cfg.workdir);

  Dataset d = load_frozen_dataset(cfg);
  InvertedIndex idx = InvertedIndex::load(paths.index_file());
  TopicModel m = TopicModel::load(paths.topics_file());
  FeatureExtractor fx(d, idx, m, cfg.bm25);

  LabeledRankingSet train = build_labeled_set(fx, querygen_options(cfg, true));
  save_labeled_set(train, paths.features("train"), paths.query_manifest("train"));
  LabeledRankingSet eval = build_labeled_set(fx, querygen_options(cfg, false));
  save_labeled_set(eval, paths.features("eval"), paths.query_manifest("eval"));

  OverlapReport overlap = target_overlap(train, eval);
  ojson o;
  o["train_queries"] = train.queries.size();
  o["eval_queries"] = eval.queries.size();
  o["shared_targets"] = overlap.shared_targets;
  o["shared_query_target_pairs"] = overlap.shared_query_target_pairs;
  o["config_hash"] = cfg.hash();
  write_text(paths.overlap(), o.dump(2) + "\n");
  mark_stage(cfg, "gen-queries");
}

void run_train(const RunConfig& cfg) {
  begin_stage(cfg);
  require_stage(cfg, "gen-queries");
  const Paths paths(cfg.workdir);

  LabeledRankingSet train = load_labeled_set(paths.features("train"), paths.query_manifest("train"));
  TrainConfig chosen = cfg.grid.at(0);
  if (cfg.grid.size() > 1) {
    CvResult cv = cross_validate(train, cfg.grid, cfg.cv_folds);
    chosen = cv.best;
    ojson jcv;
    jcv["folds"] = cfg.cv_folds;
    ojson entries = ojson::array();
    for (const CvEntry& e : cv.entries) {
      ojson je;
      je["trees"] = e.cfg.trees;
      je["leaves"] = e.cfg.leaves;
      je["mls"] = e.cfg.min_leaf_support;
      je["shrinkage"] = e.cfg.shrinkage;
      je["fold_mrr"] = e.fold_mrr;
      je["mean_mrr"] = e.mean_mrr;
      entries.push_back(je);
    }
    jcv["entries"] = entries;
    ojson best;
    best["trees"] = cv.best.trees;
    best["leaves"] = cv.best.leaves;
    best["mls"] = cv.best.min_leaf_support;
    best["shrinkage"] = cv.best.shrinkage;
    jcv["best"] = best;
    jcv["config_hash"] = cfg.hash();
    write_text(paths.cv_log(), jcv.dump(2) + "\n");
  }
  chosen.n_threads = cfg.threads;

  Ensemble model = train_lambdamart(train, chosen);
  model.save(paths.model());

  ojson log;
  log["trees"] = chosen.trees;
  log["leaves"] = chosen.leaves;
  log["mls"] = chosen.min_leaf_support;
  log["shrinkage"] = chosen.shrinkage;
  log["metric_cutoff"] = chosen.metric_cutoff;
  log["sigma"] = chosen.sigma;
  log["degenerate"] = model.degenerate;
  log["train_mrr_per_round"] = model.train_metric_log;
  log["config_hash"] = cfg.hash();
  write_text(paths.train_log(), log.dump(2) + "\n");
  mark_stage(cfg, "train");
}

void run_evaluate(const RunConfig& cfg) {
  begin_stage(cfg);
  require_stage(cfg, "index");
  require_stage(cfg, "gen-queries");
  require_stage(cfg, "train");
  const Paths paths(cfg.workdir);

  if (cfg.list_size < static_cast<size_t>(cfg.eval_cutoff)) {
    throw ConfigError("querygen.list_size must be >= eval.cutoff for exact MRR");
  }

  InvertedIndex idx = InvertedIndex::load(paths.index_file());
  LabeledRankingSet eval_set = load_labeled_set(paths.features("eval"), paths.query_manifest("eval"));
  Ensemble model = Ensemble::load(paths.model());

  EvalOptions opt;
  opt.cutoff = cfg.eval_cutoff;
  opt.n_threads = cfg.threads;
  ComparisonReport report = compare_methods(eval_set, idx, model, cfg.bm25, opt);

  const std::string metrics = report_to_json(report, model, cfg.hash());
  write_text(paths.metrics(), metrics + "\n");
  write_text(paths.report(), render_metrics_text(metrics));
  mark_stage(cfg, "evaluate");
}

std::string run_report(const RunConfig& cfg) {
  require_stage(cfg, "evaluate");
  const Paths paths(cfg.workdir);
  const std::string text = render_metrics_text(read_text(paths.metrics()));
  write_text(paths.report(), text);
  return text;
}

// ---- metrics rendering -----------------------------------------------------------

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void render_group_json(std::ostringstream& out, const json& g, const std::string& title) {
  out << "== " << title << " (" << g.at("n_queries").get<size_t>() << " queries) ==\n";
  out << "method            MRR     s@1     s@3     s@10\n";
  for (const char* name : {"bm25", "bm25f", "w5h-l2r"}) {
    if (!g.at("methods").contains(name)) continue;
    const json& m = g.at("methods").at(name);
    out << name << std::string(14 - std::string(name).size(), ' ')
        << fixed4(m.at("mrr").get<double>()) << "  " << fixed4(m.at("s@1").get<double>()) << "  "
        << fixed4(m.at("s@3").get<double>()) << "  " << fixed4(m.at("s@10").get<double>()) << "\n";
  }
  out << "Wilcoxon signed-rank on per-query reciprocal ranks (two-sided):\n";
  for (const auto& [key, res] : g.at("wilcoxon").items()) {
    out << "  " << key << ": ";
    if (res.is_null()) {
      out << "n/a (too few non-tied pairs)\n";
    } else {
      out << "W=" << format_value(res.at("W").get<double>()) << " p=" << fixed4(res.at("p").get<double>())
          << " n=" << res.at("n").get<size_t>() << (res.at("exact").get<bool>() ? " (exact)" : "")
          << "\n";
    }
  }
  out << "\n";
}

std::string feature_name(int feature) {
  if (feature == 1) return "what (bm25f)";
  if (feature <= 30) return subset_name(subset_of_index(feature));
  if (feature == 31) return "who-group";
  if (feature == 32) return "who-group,when";
  if (feature == 33) return "who-group,how";
  return "who-group,when,where";
}

}  // namespace

std::string render_metrics_text(const std::string& metrics_json_text) {
  json root = json::parse(metrics_json_text);
  std::ostringstream out;
  const json& groups = root.at("groups");
  if (groups.contains("all")) render_group_json(out, groups.at("all"), "All groups");
  for (const auto& [key, g] : groups.items()) {
    if (key == "all") continue;
    render_group_json(out, g, "Group " + key + " (" + g.at("label").get<std::string>() + ")");
  }

  std::vector<std::pair<int, int>> by_count;
  int total = 0;
  for (const auto& [f, c] : root.at("feature_importance").items()) {
    by_count.emplace_back(std::stoi(f), c.get<int>());
    total += c.get<int>();
  }
  std::sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  out << "== Feature importance (" << total << " internal nodes) ==\n";
  for (const auto& [feature, count] : by_count) {
    const std::string name = feature_name(feature);
    out << "  x" << feature << " " << name << std::string(std::max<int>(1, 28 - name.size()), ' ')
        << count << "\n";
  }
  return out.str();
}

// ---- search -----------------------------------------------------------------------

QueryObject parse_query_string(const std::string& query) {
  QueryObject q;
  std::optional<Dim> current;
  std::string value;
  auto flush = [&] {
    if (!current || value.empty()) {
      value.clear();
      return;
    }
    switch (item_kind(*current)) {
      case ItemKind::Term:
        for (std::string& t : what_terms(value)) q.items(*current).push_back(std::move(t));
        break;
      case ItemKind::Entity:
      case ItemKind::Location:
        q.items(*current).push_back(canonicalize_entity(value));
        break;
      case ItemKind::TimeToken:
        if (time_token_granularity(value)) {
          q.items(*current).push_back(value);
        } else {
          for (std::string& t : normalize_when(value)) q.items(*current).push_back(std::move(t));
        }
        break;
      case ItemKind::SourceTag:
        q.items(*current).push_back(collapse_ws(to_lower(value)));
        break;
    }
    value.clear();
  };

  std::istringstream ss(query);
  std::string token;
  while (ss >> token) {
    size_t colon = token.find(':');
    std::optional<Dim> d;
    if (colon != std::string::npos) d = dim_from_name(to_lower(token.substr(0, colon)));
    if (d) {
      if (*d == Dim::Why) throw ConfigError("the why dimension cannot be queried");
      flush();
      current = d;
      value = token.substr(colon + 1);
    } else {
      if (!value.empty()) value += " ";
      value += token;
    }
  }
  flush();
  if (q.empty()) throw ConfigError("query has no items; use dim:value tokens, e.g. what:lunch");
  return q;
}

std::vector<SearchHit> run_search(const RunConfig& cfg, const std::string& query,
                                  const std::string& method, size_t top_k) {
  require_stage(cfg, "ingest");
  require_stage(cfg, "index");
  const Paths paths(cfg.workdir);
  if (top_k < 1) throw ConfigError("top_k must be >= 1");

  QueryObject q = parse_query_string(query);
  Dataset d = load_frozen_dataset(cfg);
  InvertedIndex idx = InvertedIndex::load(paths.index_file());

  auto context_of = [&](uint32_t doc) -> std::string {
    const TraceObject* o = d.find(idx.doc_id(doc));
    if (!o) return {};
    std::string ctx;
    for (const Item& t : o->items(Dim::How)) ctx += t + " ";
    if (!o->items(Dim::When).empty()) ctx += o->items(Dim::When).front() + " ";
    std::string text;
    for (size_t i = 0; i < o->items(Dim::What).size() && i < 6; ++i) text += o->items(Dim::What)[i] + " ";
    if (!text.empty()) ctx += "| " + text;
    return collapse_ws(ctx);
  };

  std::vector<SearchHit> hits;
  if (method == "bm25") {
    for (const ScoredDoc& s : retrieve_bm25(q, idx, cfg.bm25, top_k)) {
      hits.push_back({idx.doc_id(s.doc), s.score, context_of(s.doc)});
    }
  } else if (method == "bm25f") {
    for (const ScoredDoc& s : retrieve_candidates(q, idx, cfg.bm25, top_k)) {
      hits.push_back({idx.doc_id(s.doc), s.score, context_of(s.doc)});
    }
  } else if (method == "w5h-l2r") {
    require_stage(cfg, "topics");
    require_stage(cfg, "train");
    TopicModel m = TopicModel::load(paths.topics_file());
    Ensemble model = Ensemble::load(paths.model());
    FeatureExtractor fx(d, idx, m, cfg.bm25);
    std::vector<ScoredDoc> cands = retrieve_candidates(q, idx, cfg.bm25, cfg.list_size);
    FeatureExtractor::QueryContext ctx = fx.prepare(q);
    std::vector<std::pair<double, uint32_t>> scored;
    for (const ScoredDoc& s : cands) scored.emplace_back(model.predict(fx.extract(ctx, s.doc)), s.doc);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (size_t i = 0; i < scored.size() && i < top_k; ++i) {
      hits.push_back({idx.doc_id(scored[i].second), scored[i].first, context_of(scored[i].second)});
    }
  } else {
    throw ConfigError("unknown method \"" + method + "\" (bm25 | bm25f | w5h-l2r)");
  }
  return hits;
}

}  // namespace w5h
