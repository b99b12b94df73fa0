#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "w5h/features.hpp"
#include "w5h/querygen.hpp"

namespace w5h {

struct TreeNode {
  int feature = -1;      // 1..34 for internal nodes, -1 for leaves
  double threshold = 0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0;  // leaf output

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const FeatureVector& x) const;
  int leaf_count() const;
  int internal_count() const;
};

struct Ensemble {
  std::vector<RegressionTree> trees;
  double shrinkage = 0.1;
  bool degenerate = false;               // constant-score fallback was hit
  std::vector<double> train_metric_log;  // train MRR after each boosting round

  double predict(const FeatureVector& x) const;
  double predict(std::span<const double> x) const;  // throws ArityMismatch unless 34 values

  void save(const std::string& path) const;
  static Ensemble load(const std::string& path);
};

struct TrainConfig {
  int trees = 50;
  int leaves = 15;
  int min_leaf_support = 10;
  double shrinkage = 0.1;
  int metric_cutoff = 50;  // reciprocal-rank cutoff used by the lambdas
  double sigma = 1.0;
  uint64_t seed = 1;
  int n_threads = 0;
};

// LambdaMART: per boosting round, pairwise lambdas between each query's
// positive and its negatives, scaled by the reciprocal-rank change of
// swapping the pair; a variance-reducing regression tree is fitted to the
// lambdas with Newton-step leaf values (sum lambda / sum weight) and added
// with shrinkage. Deterministic for a fixed config, independent of thread
// count.
Ensemble train_lambdamart(const LabeledRankingSet& train, const TrainConfig& cfg);

// Split counts over internal nodes; the classic split-based importance.
std::map<int, int> feature_importance(const Ensemble& e);

struct CvEntry {
  TrainConfig cfg;
  std::vector<double> fold_mrr;
  double mean_mrr = 0;
};
struct CvResult {
  TrainConfig best;
  std::vector<CvEntry> entries;
};

// K-fold cross validation with whole queries assigned to folds. Best config
// maximizes mean validation MRR; ties prefer fewer trees, then larger
// min_leaf_support.
CvResult cross_validate(const LabeledRankingSet& train, const std::vector<TrainConfig>& grid,
                        int folds = 5);

// MRR@cutoff of the ensemble over a labeled set (ties broken by ascending
// object id, as everywhere else).
double ensemble_mrr(const Ensemble& e, const LabeledRankingSet& set, int cutoff = 50);

}  // namespace w5h
