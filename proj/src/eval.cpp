#include "w5h/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace w5h {

double mrr_at(const MethodRun& run, int cutoff) {
  if (run.ranks.empty()) return 0;
  double sum = 0;
  for (uint32_t r : run.ranks) {
    if (r >= 1 && r <= static_cast<uint32_t>(cutoff)) sum += 1.0 / r;
  }
  return sum / static_cast<double>(run.ranks.size());
}

double success_at(const MethodRun& run, int k) {
  if (run.ranks.empty()) return 0;
  size_t hits = 0;
  for (uint32_t r : run.ranks) hits += (r >= 1 && r <= static_cast<uint32_t>(k));
  return static_cast<double>(hits) / static_cast<double>(run.ranks.size());
}

// ---- Wilcoxon signed-rank ------------------------------------------------------

namespace {

double normal_sf(double z) {  // P(Z > z)
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMode mode, size_t min_pairs) {
  if (a.size() != b.size()) throw TooFewPairs("paired samples differ in length");
  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0) diffs.push_back(d);
  }
  const size_t n = diffs.size();
  if (n < min_pairs) {
    throw TooFewPairs("only " + std::to_string(n) + " non-zero differences, need " +
                      std::to_string(min_pairs));
  }

  // average ranks of |d|
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t x, size_t y) { return std::fabs(diffs[x]) < std::fabs(diffs[y]); });
  std::vector<double> rank(n);
  double tie_correction = 0;  // sum of t^3 - t over tie groups
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) rank[order[k]] = avg;
    const double t = static_cast<double>(j - i);
    tie_correction += t * t * t - t;
    i = j;
  }

  double t_plus = 0, t_minus = 0;
  for (size_t i = 0; i < n; ++i) {
    (diffs[i] > 0 ? t_plus : t_minus) += rank[i];
  }

  WilcoxonResult res;
  res.n = n;
  res.W = t_plus - t_minus;
  res.exact = mode == WilcoxonMode::Exact || (mode == WilcoxonMode::Auto && n <= 25);

  if (res.exact) {
    // Doubled ranks are integers even with ties; enumerate the sign-flip
    // distribution of 2*T+ by dynamic programming.
    std::vector<long long> r2(n);
    long long total2 = 0;
    for (size_t i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * rank[i]);
      total2 += r2[i];
    }
    std::vector<double> counts(total2 + 1, 0.0);
    counts[0] = 1.0;
    long long reach = 0;
    for (size_t i = 0; i < n; ++i) {
      reach += r2[i];
      for (long long s = reach; s >= r2[i]; --s) counts[s] += counts[s - r2[i]];
    }
    const long long t_low2 = std::llround(2.0 * std::min(t_plus, t_minus));
    double cum = 0;
    for (long long s = 0; s <= t_low2; ++s) cum += counts[s];
    res.p = std::min(1.0, 2.0 * cum / std::pow(2.0, static_cast<double>(n)));
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_correction / 48.0;
    if (var <= 0) {
      res.p = 1.0;
    } else {
      double num = t_plus - mean;
      if (num > 0.5) num -= 0.5;  // continuity correction toward the mean
      else if (num < -0.5) num += 0.5;
      else num = 0;
      const double z = num / std::sqrt(var);
      res.p = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    }
  }
  return res;
}

// ---- method comparison ----------------------------------------------------------

namespace {

// 1-based rank of the target among (score, id) pairs, ties by ascending id.
uint32_t rank_of_target(const std::vector<double>& scores, const std::vector<const std::string*>& ids,
                        size_t target) {
  uint32_t rank = 1;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i == target) continue;
    if (scores[i] > scores[target] ||
        (scores[i] == scores[target] && *ids[i] < *ids[target])) {
      ++rank;
    }
  }
  return rank;
}

MethodMetrics metrics_for(const MethodRun& run, int cutoff) {
  MethodMetrics m;
  m.n_queries = run.ranks.size();
  m.mrr = mrr_at(run, cutoff);
  m.s1 = success_at(run, 1);
  m.s3 = success_at(run, 3);
  m.s10 = success_at(run, 10);
  return m;
}

std::vector<double> rr_vector(const MethodRun& run, int cutoff) {
  std::vector<double> rr(run.ranks.size(), 0.0);
  for (size_t i = 0; i < run.ranks.size(); ++i) {
    const uint32_t r = run.ranks[i];
    if (r >= 1 && r <= static_cast<uint32_t>(cutoff)) rr[i] = 1.0 / r;
  }
  return rr;
}

void finish_group(GroupComparison& g, int cutoff, WilcoxonMode mode, size_t min_pairs) {
  for (const auto& [name, run] : g.runs) g.methods[name] = metrics_for(run, cutoff);
  const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> pairs = {
      {"bm25f_vs_bm25", {"bm25f", "bm25"}},
      {"w5h-l2r_vs_bm25", {"w5h-l2r", "bm25"}},
      {"w5h-l2r_vs_bm25f", {"w5h-l2r", "bm25f"}},
  };
  for (const auto& [key, methods] : pairs) {
    const auto va = rr_vector(g.runs.at(methods.first), cutoff);
    const auto vb = rr_vector(g.runs.at(methods.second), cutoff);
    try {
      g.significance[key] = wilcoxon_signed_rank(va, vb, mode, min_pairs);
    } catch (const TooFewPairs&) {
      g.significance[key] = std::nullopt;
    }
  }
}

}  // namespace

ComparisonReport compare_methods(const LabeledRankingSet& eval_set, const InvertedIndex& idx,
                                 const Ensemble& model, const Bm25Params& params,
                                 const EvalOptions& opt) {
  ComparisonReport report;
  report.cutoff = opt.cutoff;
  const size_t n = eval_set.queries.size();
  std::vector<uint32_t> rank_bm25(n), rank_bm25f(n), rank_l2r(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) \
    num_threads(opt.n_threads > 0 ? opt.n_threads : omp_get_max_threads())
#endif
  for (size_t i = 0; i < n; ++i) {
    const LabeledQuery& q = eval_set.queries[i];

    // bm25: the query's what terms against the concatenated field, whole corpus
    {
      QueryObject what_only;
      what_only.items(Dim::What) = q.query.items(Dim::What);
      const uint32_t target = idx.resolve(q.target_id);
      std::vector<uint32_t> docs;
      for (const Item& t : what_only.items(Dim::What)) {
        if (const auto* post = idx.postings(t, InvertedIndex::kAllField)) {
          for (const Posting& e : *post) docs.push_back(e.doc);
        }
      }
      std::sort(docs.begin(), docs.end());
      docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
      if (!std::binary_search(docs.begin(), docs.end(), target)) {
        rank_bm25[i] = 0;  // target shares no what term with the query
      } else {
        const double target_score = bm25_score_doc(what_only, target, idx, params);
        uint32_t rank = 1;
        for (uint32_t doc : docs) {
          if (doc == target) continue;
          const double s = bm25_score_doc(what_only, doc, idx, params);
          if (s > target_score || (s == target_score && doc < target)) ++rank;
        }
        rank_bm25[i] = rank;
      }
    }

    // bm25f and w5h-l2r rank the stored candidate list
    {
      const size_t m = q.candidates.size();
      std::vector<double> s_bm25f(m), s_l2r(m);
      std::vector<const std::string*> ids(m);
      size_t target_pos = SIZE_MAX;
      for (size_t c = 0; c < m; ++c) {
        const LabeledCandidate& cand = q.candidates[c];
        ids[c] = &cand.object_id;
        s_bm25f[c] = bm25f_score_doc(q.query, idx.resolve(cand.object_id), idx, params);
        s_l2r[c] = model.predict(cand.x);
        if (cand.label == 1) target_pos = c;
      }
      rank_bm25f[i] = rank_of_target(s_bm25f, ids, target_pos);
      rank_l2r[i] = rank_of_target(s_l2r, ids, target_pos);
    }
  }

  auto& overall = report.overall;
  overall.label = "all";
  for (const char* name : {"bm25", "bm25f", "w5h-l2r"}) overall.runs[name].method = name;
  for (size_t i = 0; i < n; ++i) {
    const LabeledQuery& q = eval_set.queries[i];
    GroupComparison& g = report.groups[q.group];
    if (g.runs.empty()) {
      g.label = subset_name(q.query.present_mask());
      for (const char* name : {"bm25", "bm25f", "w5h-l2r"}) g.runs[name].method = name;
    }
    g.runs["bm25"].ranks.push_back(rank_bm25[i]);
    g.runs["bm25f"].ranks.push_back(rank_bm25f[i]);
    g.runs["w5h-l2r"].ranks.push_back(rank_l2r[i]);
    overall.runs["bm25"].ranks.push_back(rank_bm25[i]);
    overall.runs["bm25f"].ranks.push_back(rank_bm25f[i]);
    overall.runs["w5h-l2r"].ranks.push_back(rank_l2r[i]);
  }
  for (auto& [id, g] : report.groups) finish_group(g, opt.cutoff, opt.wilcoxon_mode, opt.min_pairs);
  finish_group(overall, opt.cutoff, opt.wilcoxon_mode, opt.min_pairs);
  return report;
}

// ---- rendering ------------------------------------------------------------------

std::string report_to_json(const ComparisonReport& report, const Ensemble& model,
                           const std::string& config_hash) {
  using json = nlohmann::ordered_json;
  json root;
  root["format"] = "w5h-metrics v1";
  root["config_hash"] = config_hash;
  root["cutoff"] = report.cutoff;

  auto group_json = [](const GroupComparison& g) {
    json jg;
    jg["label"] = g.label;
    jg["n_queries"] = g.methods.begin()->second.n_queries;
    json methods;
    for (const auto& [name, m] : g.methods) {
      json jm;
      jm["mrr"] = m.mrr;
      jm["s@1"] = m.s1;
      jm["s@3"] = m.s3;
      jm["s@10"] = m.s10;
      methods[name] = jm;
    }
    jg["methods"] = methods;
    json sig;
    for (const auto& [key, res] : g.significance) {
      if (res) {
        json jr;
        jr["W"] = res->W;
        jr["p"] = res->p;
        jr["n"] = res->n;
        jr["exact"] = res->exact;
        sig[key] = jr;
      } else {
        sig[key] = nullptr;
      }
    }
    jg["wilcoxon"] = sig;
    return jg;
  };

  json groups;
  for (const auto& [id, g] : report.groups) groups[std::to_string(id)] = group_json(g);
  groups["all"] = group_json(report.overall);
  root["groups"] = groups;

  json imp;
  for (const auto& [f, c] : feature_importance(model)) imp[std::to_string(f)] = c;
  root["feature_importance"] = imp;
  return root.dump(2);
}

}  // namespace w5h
