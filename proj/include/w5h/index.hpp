#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "w5h/object.hpp"

namespace w5h {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  // Weight per feature dimension field, indexed by Dim.
  std::array<double, kNumFeatureDims> field_weights = {1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const;  // k1 >= 0, 0 <= b <= 1, weights >= 0
};

struct Posting {
  uint32_t doc;
  uint32_t tf;
};

// Per-dimension inverted index plus a concatenated pseudo-field holding every
// item of the five dimensions. Terms are whole items (entities and time
// tokens are atomic), so field matching coincides with matches().
class InvertedIndex {
 public:
  static constexpr int kAllField = kNumFeatureDims;  // concatenated field id
  static constexpr int kNumFields = kNumFeatureDims + 1;

  static InvertedIndex build(const Dataset& d);

  uint32_t doc_count() const { return n_docs_; }
  const std::string& doc_id(uint32_t doc) const { return ids_[doc]; }
  std::optional<uint32_t> ordinal(const std::string& id) const;
  uint32_t resolve(const std::string& id) const;  // throws UnknownObject

  uint64_t field_len(uint32_t doc, int field) const { return len_[field][doc]; }
  uint64_t total_len(int field) const { return total_len_[field]; }
  double avg_len(int field) const;
  const std::vector<Posting>* postings(const std::string& term, int field) const;
  uint32_t doc_freq(const std::string& term, int field) const;
  uint32_t term_freq(const std::string& term, uint32_t doc, int field) const;

  // ln(1 + (N - df + 0.5)/(df + 0.5)) over the concatenated field.
  double idf(const std::string& term) const;

  size_t term_count(int field) const { return postings_[field].size(); }

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  uint32_t n_docs_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, uint32_t> by_id_;
  std::array<std::unordered_map<std::string, std::vector<Posting>>, kNumFields> postings_;
  std::array<std::vector<uint32_t>, kNumFields> len_;
  std::array<uint64_t, kNumFields> total_len_ = {};
};

// Plain BM25 of every query item against the concatenated field.
double bm25_score(const QueryObject& q, const std::string& object_id, const InvertedIndex& idx,
                  const Bm25Params& p);
double bm25_score_doc(const QueryObject& q, uint32_t doc, const InvertedIndex& idx, const Bm25Params& p);

// Field-based BM25: each query item scores against its own dimension's field
// with per-field length normalization and weights; idf is cross-field.
double bm25f_score(const QueryObject& q, const std::string& object_id, const InvertedIndex& idx,
                   const Bm25Params& p);
double bm25f_score_doc(const QueryObject& q, uint32_t doc, const InvertedIndex& idx, const Bm25Params& p,
                       DimMask dims = kAllFeatureDims);

struct ScoredDoc {
  uint32_t doc;
  double score;
};

// Union over dimensions of objects sharing at least one query item in that
// dimension, ranked by bm25f (ties by ascending object id), truncated to cap.
std::vector<ScoredDoc> retrieve_candidates(const QueryObject& q, const InvertedIndex& idx,
                                           const Bm25Params& p, size_t cap = 1000);

// Same contract for the plain-BM25 method: candidates share a concatenated-
// field term with the query.
std::vector<ScoredDoc> retrieve_bm25(const QueryObject& q, const InvertedIndex& idx, const Bm25Params& p,
                                     size_t cap = 1000);

}  // namespace w5h
