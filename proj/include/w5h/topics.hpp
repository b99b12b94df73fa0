#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "w5h/object.hpp"

namespace w5h {

struct TopicModelParams {
  int K = 50;
  double alpha = -1.0;  // <= 0 resolves to 50.0 / K
  double beta = 0.01;
  int iters = 1000;
  uint64_t seed = 1;

  double resolved_alpha() const { return alpha > 0 ? alpha : 50.0 / K; }
};

// Collapsed Gibbs LDA over each object's what terms. Objects with an empty
// what dimension are not in the corpus and have no topic.
class TopicModel {
 public:
  int K() const { return K_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  uint64_t seed() const { return seed_; }
  int iters() const { return iters_; }

  size_t vocab_size() const { return vocab_.size(); }
  size_t doc_count() const { return doc_ids_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }

  std::optional<uint32_t> word_id(const std::string& w) const;
  std::optional<uint32_t> doc_index(const std::string& object_id) const;

  // count tables
  int64_t word_topic(uint32_t w, int k) const { return n_wk_[w * K_ + k]; }
  int64_t topic_total(int k) const { return n_k_[k]; }
  int64_t doc_topic(uint32_t doc, int k) const { return n_kd_[doc * K_ + k]; }
  int64_t doc_token_count(uint32_t doc) const { return doc_tokens_[doc]; }

  // argmax_k n_kd + alpha, ties to the lowest topic id
  int dominant_topic(const std::string& object_id) const;  // throws ObjectNotInCorpus
  int dominant_topic_of_doc(uint32_t doc) const;

  // argmax_k sum over known terms of n_wk; nullopt when every term is unknown
  std::optional<int> query_topic(const std::vector<std::string>& what_terms) const;

  // (n_kd + alpha) normalized; sums to 1
  std::vector<double> topic_proportions(const std::string& object_id) const;

  void check_invariants() const;  // throws SchemaError on violation

  void save(const std::string& path) const;
  static TopicModel load(const std::string& path);

 private:
  friend TopicModel fit_lda(const Dataset&, const TopicModelParams&,
                            const std::function<void(const TopicModel&, int)>&);
  int K_ = 0;
  double alpha_ = 0, beta_ = 0;
  uint64_t seed_ = 0;
  int iters_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, uint32_t> vocab_index_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, uint32_t> doc_index_;
  std::vector<int64_t> doc_tokens_;
  std::vector<int64_t> n_wk_;  // V x K
  std::vector<int64_t> n_kd_;  // D x K
  std::vector<int64_t> n_k_;   // K
};

using SweepObserver = std::function<void(const TopicModel&, int sweep)>;

// Deterministic for fixed (corpus, params). The observer, when set, runs
// after every sweep (used to assert count invariants mid-fit).
TopicModel fit_lda(const Dataset& d, const TopicModelParams& params, const SweepObserver& observer = {});

}  // namespace w5h
