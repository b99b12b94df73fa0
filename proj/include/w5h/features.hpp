#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "w5h/index.hpp"
#include "w5h/object.hpp"
#include "w5h/topics.hpp"

namespace w5h {

inline constexpr int kNumFeatures = 34;

// x1 is the what-field BM25F score; x2..x30 are co-occurrence counts over
// dimension subsets; x31..x34 are the who-group counts. Counts are exact
// integers stored in doubles.
struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double x(int i) const { return values[i - 1]; }        // 1-based, spec indexing
  void set_x(int i, double v) { values[i - 1] = v; }
  bool operator==(const FeatureVector&) const = default;
};

// Bijection between indices 1..30 and the size-1..4 subsets of
// {what, who, when, where, how}, ordered by (size, lexicographic over the
// fixed dimension order). The full five-dimension subset is excluded.
int subset_index(DimMask s);            // throws InvalidSubset
DimMask subset_of_index(int index);     // throws InvalidSubset unless 1..30
const std::array<DimMask, 31>& subset_table();  // [1..30] valid
std::string subset_name(DimMask s);     // "what,who" style, canonical order

// Group-feature composition for indices 31..34: who-group plus these extras.
DimMask group_extra_dims(int index);    // 31 -> {}, 32 -> {when}, 33 -> {how}, 34 -> {when, where}

// Read-side feature computation over a frozen dataset, built index and
// fitted topic model. prepare() does the dataset-wide counting once per
// query; extract() per candidate is then cheap gate checks.
class FeatureExtractor {
 public:
  FeatureExtractor(const Dataset& d, const InvertedIndex& idx, const TopicModel& m, Bm25Params params);

  struct Tuple {
    std::array<const DocBits*, 4> bits{};  // participation set per dimension in the subset
    int arity = 0;
    uint64_t count = 0;  // dataset-wide objects containing the whole combination
  };

  struct QueryContext {
    // Tuples point into item_bits, so the context moves but never copies.
    QueryContext() = default;
    QueryContext(QueryContext&&) = default;
    QueryContext& operator=(QueryContext&&) = default;
    QueryContext(const QueryContext&) = delete;
    QueryContext& operator=(const QueryContext&) = delete;

    QueryObject query;
    std::optional<int> topic;
    DimMask active = 0;  // dims that can participate in combinations
    std::array<std::vector<DocBits>, kNumFeatureDims> item_bits;  // owned, per query item
    std::array<std::vector<Tuple>, 31> subsets;                   // [2..30]
    // who-group features
    std::vector<const DocBits*> group_gate;  // distinct who item sets (|G| >= 2)
    uint64_t group_count = 0;                // x31 count
    std::vector<std::pair<const DocBits*, uint64_t>> group_when;  // x32 per when item
    std::vector<std::pair<const DocBits*, uint64_t>> group_how;   // x33 per how item
    struct GroupWhenWhere {
      const DocBits* when_bits;
      const DocBits* where_bits;
      uint64_t count;
    };
    std::vector<GroupWhenWhere> group_when_where;  // x34 per (when, where) pair
  };

  QueryContext prepare(const QueryObject& q) const;
  FeatureVector extract(const QueryContext& ctx, uint32_t doc) const;
  FeatureVector extract(const QueryObject& q, const std::string& object_id) const;

  // The dataset-wide frequency for one dimension subset (an x2..x30 slot).
  uint64_t frequency(DimMask s, const QueryObject& q, const std::string& object_id) const;

  const Dataset& dataset() const { return dataset_; }
  const InvertedIndex& index() const { return index_; }
  const TopicModel& topics() const { return topics_; }
  const Bm25Params& params() const { return params_; }
  // Dominant topic per dataset ordinal, -1 when the object is not in the
  // topic corpus.
  int dominant_topic_of(uint32_t doc) const { return dominant_[doc]; }

 private:
  const Dataset& dataset_;
  const InvertedIndex& index_;
  const TopicModel& topics_;
  Bm25Params params_;
  std::vector<int> dominant_;
  std::vector<DocBits> topic_docs_;

  DocBits bits_for_item(Dim d, const Item& item) const;
};

// ---- feature file ("<label> qid:<n> 1:<v> ... 34:<v> # <object id>") --------

struct FeatureFileEntry {
  int label = 0;
  uint32_t qid = 0;
  FeatureVector x;
  std::string object_id;
};

std::string feature_line(const FeatureFileEntry& e);
FeatureFileEntry parse_feature_line(std::string_view line);  // SchemaError / ArityMismatch
void write_feature_file(const std::vector<FeatureFileEntry>& entries, const std::string& path);
std::vector<FeatureFileEntry> read_feature_file(const std::string& path);

}  // namespace w5h
