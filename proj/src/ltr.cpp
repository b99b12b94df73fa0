#include "w5h/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace w5h {

double RegressionTree::predict(const FeatureVector& x) const {
  int n = 0;
  while (!nodes[n].is_leaf()) {
    n = x.x(nodes[n].feature) <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return nodes[n].value;
}

int RegressionTree::leaf_count() const {
  int c = 0;
  for (const TreeNode& n : nodes) c += n.is_leaf();
  return c;
}

int RegressionTree::internal_count() const { return static_cast<int>(nodes.size()) - leaf_count(); }

double Ensemble::predict(const FeatureVector& x) const {
  double s = 0;
  for (const RegressionTree& t : trees) s += shrinkage * t.predict(x);
  return s;
}

double Ensemble::predict(std::span<const double> x) const {
  if (x.size() != kNumFeatures) {
    throw ArityMismatch("expected 34 feature values, got " + std::to_string(x.size()));
  }
  FeatureVector v;
  std::copy(x.begin(), x.end(), v.values.begin());
  return predict(v);
}

namespace {

// Flat training view: samples grouped by query.
struct TrainData {
  std::vector<FeatureVector> x;
  std::vector<uint32_t> tie_key;  // rank of the candidate id within its query
  std::vector<size_t> query_start;  // size n_queries + 1
  std::vector<size_t> positive;     // sample index of each query's positive
};

TrainData flatten(const LabeledRankingSet& set) {
  TrainData td;
  td.query_start.push_back(0);
  for (const LabeledQuery& q : set.queries) {
    if (q.candidates.size() < 2) {
      throw SchemaError("query " + std::to_string(q.qid) + " has fewer than 2 candidates");
    }
    const size_t base = td.x.size();
    size_t pos = SIZE_MAX;
    std::vector<uint32_t> order(q.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      return q.candidates[a].object_id < q.candidates[b].object_id;
    });
    std::vector<uint32_t> rank_of(q.candidates.size());
    for (uint32_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r;
    for (size_t c = 0; c < q.candidates.size(); ++c) {
      if (q.candidates[c].label == 1) {
        if (pos != SIZE_MAX) throw SchemaError("query " + std::to_string(q.qid) + " has two positives");
        pos = base + c;
      }
      td.x.push_back(q.candidates[c].x);
      td.tie_key.push_back(rank_of[c]);
    }
    if (pos == SIZE_MAX) throw SchemaError("query " + std::to_string(q.qid) + " has no positive");
    td.positive.push_back(pos);
    td.query_start.push_back(td.x.size());
  }
  return td;
}

// 1-based rank of each sample in its query under (score desc, tie_key asc).
void rank_query(const TrainData& td, const std::vector<double>& scores, size_t q,
                std::vector<uint32_t>& ranks, std::vector<uint32_t>& scratch) {
  const size_t begin = td.query_start[q], end = td.query_start[q + 1];
  const size_t n = end - begin;
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), 0);
  std::sort(scratch.begin(), scratch.end(), [&](uint32_t a, uint32_t b) {
    const double sa = scores[begin + a], sb = scores[begin + b];
    if (sa != sb) return sa > sb;
    return td.tie_key[begin + a] < td.tie_key[begin + b];
  });
  ranks.resize(n);
  for (uint32_t r = 0; r < n; ++r) ranks[scratch[r]] = r + 1;
}

double reciprocal_rank(uint32_t rank, int cutoff) {
  return rank <= static_cast<uint32_t>(cutoff) ? 1.0 / rank : 0.0;
}

// ---- regression tree fitting -------------------------------------------------

struct SplitChoice {
  double gain = -1;  // sum_l^2/n_l + sum_r^2/n_r; -1 = no feasible split
  int feature = 0;
  double threshold = 0;
  bool feasible() const { return gain >= 0; }
};

struct BuildLeaf {
  int node = 0;              // index into the tree's node vector
  std::vector<uint32_t> samples;
  double sum_lambda = 0;
  SplitChoice best;
  int seq = 0;  // creation order, tie-break for pop order
};

SplitChoice best_split_for_feature(const std::vector<FeatureVector>& x,
                                   const std::vector<double>& lambda,
                                   const std::vector<uint32_t>& samples, int feature, int mls,
                                   double total_sum) {
  const size_t n = samples.size();
  // candidate thresholds sit between runs of equal feature values, so sort by
  // (value, position) for a canonical summation order
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    const double va = x[samples[a]].x(feature), vb = x[samples[b]].x(feature);
    if (va != vb) return va < vb;
    return a < b;
  });

  SplitChoice best;
  best.feature = feature;
  double left_sum = 0;
  size_t left_cnt = 0;
  for (size_t i = 0; i + 1 < n;) {
    const double v = x[samples[order[i]]].x(feature);
    // absorb the whole run of this value into the left side
    while (i < n && x[samples[order[i]]].x(feature) == v) {
      left_sum += lambda[samples[order[i]]];
      ++left_cnt;
      ++i;
    }
    if (i >= n) break;  // no samples remain on the right
    const size_t right_cnt = n - left_cnt;
    if (left_cnt < static_cast<size_t>(mls) || right_cnt < static_cast<size_t>(mls)) continue;
    const double right_sum = total_sum - left_sum;
    const double gain = left_sum * left_sum / left_cnt + right_sum * right_sum / right_cnt;
    if (gain > best.gain || (gain == best.gain && v < best.threshold)) {
      best.gain = gain;
      best.threshold = v;
    }
  }
  return best;
}

SplitChoice best_split(const std::vector<FeatureVector>& x, const std::vector<double>& lambda,
                       const std::vector<uint32_t>& samples, int mls, int n_threads) {
  double total_sum = 0;
  for (uint32_t s : samples) total_sum += lambda[s];

  std::array<SplitChoice, kNumFeatures> per_feature;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads > 0 ? n_threads : omp_get_max_threads())
#endif
  for (int f = 1; f <= kNumFeatures; ++f) {
    per_feature[f - 1] = best_split_for_feature(x, lambda, samples, f, mls, total_sum);
  }

  SplitChoice best;  // serial reduction: ties go to the lower feature index
  for (const SplitChoice& c : per_feature) {
    if (!c.feasible()) continue;
    if (!best.feasible() || c.gain > best.gain ||
        (c.gain == best.gain && (c.feature < best.feature ||
                                 (c.feature == best.feature && c.threshold < best.threshold)))) {
      best = c;
    }
  }
  if (best.feasible()) {
    // Subtract the leaf's own baseline so gains are the global SSE reduction
    // and stay comparable across open leaves in the best-first pick.
    best.gain = std::max(0.0, best.gain - total_sum * total_sum / static_cast<double>(samples.size()));
  }
  return best;
}

RegressionTree fit_tree(const std::vector<FeatureVector>& x, const std::vector<double>& lambda,
                        const std::vector<double>& weight, const TrainConfig& cfg,
                        std::vector<int>& leaf_of_sample) {
  RegressionTree tree;
  tree.nodes.push_back({});

  std::vector<BuildLeaf> open;
  {
    BuildLeaf root;
    root.node = 0;
    root.samples.resize(x.size());
    std::iota(root.samples.begin(), root.samples.end(), 0);
    for (uint32_t s : root.samples) root.sum_lambda += lambda[s];
    root.best = best_split(x, lambda, root.samples, cfg.min_leaf_support, cfg.n_threads);
    root.seq = 0;
    open.push_back(std::move(root));
  }

  int n_leaves = 1;
  int seq = 1;
  while (n_leaves < cfg.leaves) {
    // best-first: split the open leaf with the largest gain
    int pick = -1;
    for (int i = 0; i < static_cast<int>(open.size()); ++i) {
      if (!open[i].best.feasible()) continue;
      if (pick < 0 || open[i].best.gain > open[pick].best.gain ||
          (open[i].best.gain == open[pick].best.gain && open[i].seq < open[pick].seq)) {
        pick = i;
      }
    }
    if (pick < 0) break;  // nothing splittable

    BuildLeaf leaf = std::move(open[pick]);
    open.erase(open.begin() + pick);

    BuildLeaf lchild, rchild;
    for (uint32_t s : leaf.samples) {  // stable partition keeps summation order fixed
      if (x[s].x(leaf.best.feature) <= leaf.best.threshold) {
        lchild.samples.push_back(s);
        lchild.sum_lambda += lambda[s];
      } else {
        rchild.samples.push_back(s);
        rchild.sum_lambda += lambda[s];
      }
    }
    lchild.node = static_cast<int>(tree.nodes.size());
    rchild.node = lchild.node + 1;
    tree.nodes[leaf.node].feature = leaf.best.feature;
    tree.nodes[leaf.node].threshold = leaf.best.threshold;
    tree.nodes[leaf.node].left = lchild.node;
    tree.nodes[leaf.node].right = rchild.node;
    tree.nodes.push_back({});
    tree.nodes.push_back({});

    lchild.best = best_split(x, lambda, lchild.samples, cfg.min_leaf_support, cfg.n_threads);
    rchild.best = best_split(x, lambda, rchild.samples, cfg.min_leaf_support, cfg.n_threads);
    lchild.seq = seq++;
    rchild.seq = seq++;
    open.push_back(std::move(lchild));
    open.push_back(std::move(rchild));
    ++n_leaves;
  }

  for (const BuildLeaf& leaf : open) {
    double sum_w = 0;
    for (uint32_t s : leaf.samples) sum_w += weight[s];
    // Newton step; a zero second-order sum means the lambdas are all zero too
    tree.nodes[leaf.node].value = sum_w > 0 ? leaf.sum_lambda / sum_w : 0.0;
    for (uint32_t s : leaf.samples) leaf_of_sample[s] = leaf.node;
  }
  return tree;
}

}  // namespace

Ensemble train_lambdamart(const LabeledRankingSet& train, const TrainConfig& cfg) {
  if (cfg.trees < 1 || cfg.leaves < 2) throw ConfigError("need trees >= 1 and leaves >= 2");
  if (cfg.min_leaf_support < 1) throw ConfigError("min_leaf_support must be >= 1");
  TrainData td = flatten(train);
  const size_t n = td.x.size();
  const size_t n_queries = train.queries.size();

  Ensemble ens;
  ens.shrinkage = cfg.shrinkage;

  auto train_mrr = [&](const std::vector<double>& scores) {
    std::vector<uint32_t> ranks, scratch;
    double mrr = 0;
    for (size_t q = 0; q < n_queries; ++q) {
      rank_query(td, scores, q, ranks, scratch);
      mrr += reciprocal_rank(ranks[td.positive[q] - td.query_start[q]], cfg.metric_cutoff);
    }
    return mrr / static_cast<double>(n_queries);
  };

  // Degenerate training data cannot support a single split anywhere.
  bool all_identical = true;
  for (size_t i = 1; i < n && all_identical; ++i) all_identical = td.x[i] == td.x[0];
  if (all_identical) {
    std::cerr << "w5h: warning: all feature vectors identical; returning a constant-score model\n";
    ens.degenerate = true;
    RegressionTree t;
    t.nodes.push_back({});
    ens.trees.push_back(std::move(t));
    ens.train_metric_log.push_back(train_mrr(std::vector<double>(n, 0.0)));
    return ens;
  }

  std::vector<double> scores(n, 0.0);
  std::vector<double> lambda(n), weight(n);
  std::vector<int> leaf_of_sample(n);

  const int threads =
#ifdef _OPENMP
      cfg.n_threads > 0 ? cfg.n_threads : omp_get_max_threads();
#else
      1;
#endif

  for (int round = 0; round < cfg.trees; ++round) {
    std::fill(lambda.begin(), lambda.end(), 0.0);
    std::fill(weight.begin(), weight.end(), 0.0);

#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
#endif
    {
      std::vector<uint32_t> ranks, scratch;
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 16)
#endif
      for (size_t q = 0; q < n_queries; ++q) {
        rank_query(td, scores, q, ranks, scratch);
        const size_t begin = td.query_start[q], end = td.query_start[q + 1];
        const size_t pos = td.positive[q];
        const double rr_pos = reciprocal_rank(ranks[pos - begin], cfg.metric_cutoff);
        for (size_t j = begin; j < end; ++j) {
          if (j == pos) continue;
          const double delta = std::fabs(rr_pos - reciprocal_rank(ranks[j - begin], cfg.metric_cutoff));
          if (delta == 0) continue;
          const double rho = 1.0 / (1.0 + std::exp(cfg.sigma * (scores[pos] - scores[j])));
          const double l = cfg.sigma * rho * delta;
          const double w = cfg.sigma * cfg.sigma * rho * (1.0 - rho) * delta;
          lambda[pos] += l;
          lambda[j] -= l;
          weight[pos] += w;
          weight[j] += w;
        }
      }
    }

    RegressionTree tree = fit_tree(td.x, lambda, weight, cfg, leaf_of_sample);
    for (size_t i = 0; i < n; ++i) scores[i] += cfg.shrinkage * tree.nodes[leaf_of_sample[i]].value;
    ens.trees.push_back(std::move(tree));
    ens.train_metric_log.push_back(train_mrr(scores));
  }
  return ens;
}

std::map<int, int> feature_importance(const Ensemble& e) {
  std::map<int, int> counts;
  for (const RegressionTree& t : e.trees) {
    for (const TreeNode& n : t.nodes) {
      if (!n.is_leaf()) ++counts[n.feature];
    }
  }
  return counts;
}

double ensemble_mrr(const Ensemble& e, const LabeledRankingSet& set, int cutoff) {
  if (set.queries.empty()) return 0;
  double mrr = 0;
  for (const LabeledQuery& q : set.queries) {
    size_t target = SIZE_MAX;
    std::vector<double> scores(q.candidates.size());
    for (size_t c = 0; c < q.candidates.size(); ++c) {
      scores[c] = e.predict(q.candidates[c].x);
      if (q.candidates[c].label == 1) target = c;
    }
    if (target == SIZE_MAX) continue;
    uint32_t rank = 1;
    for (size_t c = 0; c < q.candidates.size(); ++c) {
      if (c == target) continue;
      if (scores[c] > scores[target] ||
          (scores[c] == scores[target] && q.candidates[c].object_id < q.candidates[target].object_id)) {
        ++rank;
      }
    }
    mrr += reciprocal_rank(rank, cutoff);
  }
  return mrr / static_cast<double>(set.queries.size());
}

CvResult cross_validate(const LabeledRankingSet& train, const std::vector<TrainConfig>& grid, int folds) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (grid.empty()) throw ConfigError("empty config grid");
  const size_t n_queries = train.queries.size();
  if (n_queries < static_cast<size_t>(folds)) throw ConfigError("fewer queries than folds");

  CvResult result;
  for (const TrainConfig& cfg : grid) {
    CvEntry entry;
    entry.cfg = cfg;
    for (int f = 0; f < folds; ++f) {
      LabeledRankingSet fit_set, val_set;
      for (size_t q = 0; q < n_queries; ++q) {
        (q % folds == static_cast<size_t>(f) ? val_set : fit_set).queries.push_back(train.queries[q]);
      }
      Ensemble e = train_lambdamart(fit_set, cfg);
      entry.fold_mrr.push_back(ensemble_mrr(e, val_set, cfg.metric_cutoff));
    }
    entry.mean_mrr = std::accumulate(entry.fold_mrr.begin(), entry.fold_mrr.end(), 0.0) /
                     static_cast<double>(folds);
    result.entries.push_back(std::move(entry));
  }

  const CvEntry* best = &result.entries[0];
  for (const CvEntry& e : result.entries) {
    if (e.mean_mrr > best->mean_mrr ||
        (e.mean_mrr == best->mean_mrr &&
         (e.cfg.trees < best->cfg.trees ||
          (e.cfg.trees == best->cfg.trees && e.cfg.min_leaf_support > best->cfg.min_leaf_support)))) {
      best = &e;
    }
  }
  result.best = best->cfg;
  return result;
}

// ---- persistence -------------------------------------------------------------

void Ensemble::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << "w5h-ensemble v1\n";
  out << "shrinkage " << format_double(shrinkage) << "\n";
  out << "degenerate " << (degenerate ? 1 : 0) << "\n";
  out << "trees " << trees.size() << "\n";
  for (size_t t = 0; t < trees.size(); ++t) {
    out << "tree " << t << " nodes " << trees[t].nodes.size() << "\n";
    for (size_t i = 0; i < trees[t].nodes.size(); ++i) {
      const TreeNode& n = trees[t].nodes[i];
      if (n.is_leaf()) {
        out << i << " leaf " << format_double(n.value) << "\n";
      } else {
        out << i << " split " << n.feature << " " << format_double(n.threshold) << " " << n.left << " "
            << n.right << "\n";
      }
    }
  }
}

Ensemble Ensemble::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("model file not found: " + path);
  std::string line, kw;
  if (!std::getline(in, line) || line != "w5h-ensemble v1") throw SchemaError("bad model header");
  Ensemble e;
  size_t n_trees = 0;
  {
    std::getline(in, line);
    std::istringstream ss(line);
    ss >> kw >> e.shrinkage;
    if (kw != "shrinkage") throw SchemaError("missing shrinkage");
    std::getline(in, line);
    std::istringstream ss2(line);
    int deg = 0;
    ss2 >> kw >> deg;
    if (kw != "degenerate") throw SchemaError("missing degenerate flag");
    e.degenerate = deg != 0;
    std::getline(in, line);
    std::istringstream ss3(line);
    ss3 >> kw >> n_trees;
    if (kw != "trees") throw SchemaError("missing tree count");
  }
  for (size_t t = 0; t < n_trees; ++t) {
    if (!std::getline(in, line)) throw SchemaError("truncated model");
    std::istringstream ss(line);
    size_t tid = 0, n_nodes = 0;
    ss >> kw >> tid >> kw >> n_nodes;
    RegressionTree tree;
    tree.nodes.resize(n_nodes);
    for (size_t i = 0; i < n_nodes; ++i) {
      if (!std::getline(in, line)) throw SchemaError("truncated tree");
      std::istringstream ns(line);
      size_t id = 0;
      std::string kind;
      ns >> id >> kind;
      if (id >= n_nodes) throw SchemaError("bad node id");
      if (kind == "leaf") {
        std::string v;
        ns >> v;
        tree.nodes[id].value = parse_double(v);
      } else if (kind == "split") {
        std::string thr;
        ns >> tree.nodes[id].feature >> thr >> tree.nodes[id].left >> tree.nodes[id].right;
        tree.nodes[id].threshold = parse_double(thr);
        if (tree.nodes[id].feature < 1 || tree.nodes[id].feature > kNumFeatures) {
          throw SchemaError("bad feature index in model");
        }
      } else {
        throw SchemaError("bad node kind: " + kind);
      }
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

}  // namespace w5h
