#include "w5h/topics.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace w5h {

std::optional<uint32_t> TopicModel::word_id(const std::string& w) const {
  auto it = vocab_index_.find(w);
  if (it == vocab_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<uint32_t> TopicModel::doc_index(const std::string& object_id) const {
  auto it = doc_index_.find(object_id);
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

int TopicModel::dominant_topic_of_doc(uint32_t doc) const {
  int best = 0;
  int64_t best_count = n_kd_[doc * K_];
  for (int k = 1; k < K_; ++k) {
    const int64_t c = n_kd_[doc * K_ + k];
    if (c > best_count) {
      best = k;
      best_count = c;
    }
  }
  return best;  // + alpha is symmetric, so raw-count argmax is identical
}

int TopicModel::dominant_topic(const std::string& object_id) const {
  auto doc = doc_index(object_id);
  if (!doc) throw ObjectNotInCorpus("object has no topic (empty what): " + object_id);
  return dominant_topic_of_doc(*doc);
}

std::optional<int> TopicModel::query_topic(const std::vector<std::string>& what_terms) const {
  std::vector<int64_t> sums(K_, 0);
  bool any_known = false;
  for (const std::string& t : what_terms) {
    if (auto w = word_id(t)) {
      any_known = true;
      for (int k = 0; k < K_; ++k) sums[k] += n_wk_[*w * K_ + k];
    }
  }
  if (!any_known) return std::nullopt;
  int best = 0;
  for (int k = 1; k < K_; ++k) {
    if (sums[k] > sums[best]) best = k;
  }
  return best;
}

std::vector<double> TopicModel::topic_proportions(const std::string& object_id) const {
  auto doc = doc_index(object_id);
  if (!doc) throw ObjectNotInCorpus("object has no topic (empty what): " + object_id);
  std::vector<double> props(K_);
  const double denom = static_cast<double>(doc_tokens_[*doc]) + K_ * alpha_;
  for (int k = 0; k < K_; ++k) props[k] = (n_kd_[*doc * K_ + k] + alpha_) / denom;
  return props;
}

void TopicModel::check_invariants() const {
  std::vector<int64_t> per_topic(K_, 0);
  for (size_t w = 0; w < vocab_.size(); ++w) {
    for (int k = 0; k < K_; ++k) {
      const int64_t c = n_wk_[w * K_ + k];
      if (c < 0) throw SchemaError("negative word-topic count");
      per_topic[k] += c;
    }
  }
  for (int k = 0; k < K_; ++k) {
    if (per_topic[k] != n_k_[k]) throw SchemaError("word-topic column sum != topic total");
  }
  for (size_t d = 0; d < doc_ids_.size(); ++d) {
    int64_t sum = 0;
    for (int k = 0; k < K_; ++k) {
      const int64_t c = n_kd_[d * K_ + k];
      if (c < 0) throw SchemaError("negative doc-topic count");
      sum += c;
    }
    if (sum != doc_tokens_[d]) throw SchemaError("doc-topic row sum != token count");
  }
}

TopicModel fit_lda(const Dataset& d, const TopicModelParams& params, const SweepObserver& observer) {
  if (params.K < 1) throw ConfigError("K must be >= 1");
  if (params.iters < 1) throw ConfigError("iters must be >= 1");

  TopicModel m;
  m.K_ = params.K;
  m.alpha_ = params.resolved_alpha();
  m.beta_ = params.beta;
  m.seed_ = params.seed;
  m.iters_ = params.iters;

  // corpus: what terms of objects that have any, in frozen (id) order
  std::vector<std::vector<uint32_t>> docs;
  for (const TraceObject& o : d.objects()) {
    const ItemList& terms = o.items(Dim::What);
    if (terms.empty()) continue;
    const uint32_t doc = static_cast<uint32_t>(m.doc_ids_.size());
    m.doc_ids_.push_back(o.id);
    m.doc_index_.emplace(o.id, doc);
    std::vector<uint32_t> tokens;
    tokens.reserve(terms.size());
    for (const std::string& t : terms) {
      auto it = m.vocab_index_.find(t);
      uint32_t w;
      if (it == m.vocab_index_.end()) {
        w = static_cast<uint32_t>(m.vocab_.size());
        m.vocab_.push_back(t);
        m.vocab_index_.emplace(t, w);
      } else {
        w = it->second;
      }
      tokens.push_back(w);
    }
    docs.push_back(std::move(tokens));
  }
  if (docs.empty()) throw EmptyCorpus("no object has what terms");

  const int K = m.K_;
  const size_t V = m.vocab_.size();
  const size_t D = docs.size();
  m.n_wk_.assign(V * K, 0);
  m.n_kd_.assign(D * K, 0);
  m.n_k_.assign(K, 0);
  m.doc_tokens_.assign(D, 0);

  std::vector<std::vector<uint16_t>> z(D);
  std::mt19937_64 rng(params.seed);
  for (size_t doc = 0; doc < D; ++doc) {
    z[doc].resize(docs[doc].size());
    m.doc_tokens_[doc] = static_cast<int64_t>(docs[doc].size());
    for (size_t i = 0; i < docs[doc].size(); ++i) {
      const int k = static_cast<int>(rng() % K);
      z[doc][i] = static_cast<uint16_t>(k);
      ++m.n_wk_[docs[doc][i] * K + k];
      ++m.n_kd_[doc * K + k];
      ++m.n_k_[k];
    }
  }

  const double alpha = m.alpha_;
  const double beta = m.beta_;
  const double vbeta = static_cast<double>(V) * beta;
  std::vector<double> cdf(K);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int sweep = 0; sweep < params.iters; ++sweep) {
    for (size_t doc = 0; doc < D; ++doc) {
      int64_t* nd = &m.n_kd_[doc * K];
      for (size_t i = 0; i < docs[doc].size(); ++i) {
        const uint32_t w = docs[doc][i];
        const int old_k = z[doc][i];
        int64_t* nw = &m.n_wk_[w * K];
        --nw[old_k];
        --nd[old_k];
        --m.n_k_[old_k];

        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
          acc += (nw[k] + beta) / (m.n_k_[k] + vbeta) * (nd[k] + alpha);
          cdf[k] = acc;
        }
        const double u = unit(rng) * acc;
        int new_k = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (new_k >= K) new_k = K - 1;

        z[doc][i] = static_cast<uint16_t>(new_k);
        ++nw[new_k];
        ++nd[new_k];
        ++m.n_k_[new_k];
      }
    }
    if (observer) observer(m, sweep);
  }
  return m;
}

// ---- persistence -------------------------------------------------------------

void TopicModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << "w5h-topics v1\n";
  out << "K " << K_ << " alpha " << format_double(alpha_) << " beta " << format_double(beta_)
      << " seed " << seed_ << " iters " << iters_ << "\n";
  out << "V " << vocab_.size() << " D " << doc_ids_.size() << "\n";
  for (const std::string& w : vocab_) out << w << '\n';
  for (size_t d = 0; d < doc_ids_.size(); ++d) out << doc_ids_[d] << '\t' << doc_tokens_[d] << '\n';
  for (size_t w = 0; w < vocab_.size(); ++w) {
    for (int k = 0; k < K_; ++k) out << n_wk_[w * K_ + k] << (k + 1 == K_ ? '\n' : ' ');
  }
  for (size_t d = 0; d < doc_ids_.size(); ++d) {
    for (int k = 0; k < K_; ++k) out << n_kd_[d * K_ + k] << (k + 1 == K_ ? '\n' : ' ');
  }
}

TopicModel TopicModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("topic model not found: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "w5h-topics v1") throw SchemaError("bad topic model header");
  TopicModel m;
  {
    if (!std::getline(in, line)) throw SchemaError("truncated topic model");
    std::istringstream ss(line);
    std::string kw;
    ss >> kw >> m.K_ >> kw >> m.alpha_ >> kw >> m.beta_ >> kw >> m.seed_ >> kw >> m.iters_;
    if (m.K_ < 1) throw SchemaError("bad K in topic model");
  }
  size_t V = 0, D = 0;
  {
    if (!std::getline(in, line)) throw SchemaError("truncated topic model");
    std::istringstream ss(line);
    std::string kw;
    ss >> kw >> V >> kw >> D;
  }
  m.vocab_.reserve(V);
  for (size_t w = 0; w < V; ++w) {
    if (!std::getline(in, line)) throw SchemaError("truncated vocabulary");
    m.vocab_.push_back(line);
    m.vocab_index_.emplace(line, static_cast<uint32_t>(w));
  }
  m.doc_tokens_.resize(D);
  for (size_t d = 0; d < D; ++d) {
    if (!std::getline(in, line)) throw SchemaError("truncated doc table");
    size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw SchemaError("bad doc line in topic model");
    m.doc_ids_.push_back(line.substr(0, tab));
    m.doc_index_.emplace(m.doc_ids_.back(), static_cast<uint32_t>(d));
    m.doc_tokens_[d] = std::stoll(line.substr(tab + 1));
  }
  m.n_wk_.resize(V * m.K_);
  m.n_kd_.resize(D * m.K_);
  m.n_k_.assign(m.K_, 0);
  for (size_t w = 0; w < V; ++w) {
    if (!std::getline(in, line)) throw SchemaError("truncated word-topic table");
    std::istringstream ss(line);
    for (int k = 0; k < m.K_; ++k) {
      if (!(ss >> m.n_wk_[w * m.K_ + k])) throw SchemaError("bad word-topic row");
      m.n_k_[k] += m.n_wk_[w * m.K_ + k];
    }
  }
  for (size_t d = 0; d < D; ++d) {
    if (!std::getline(in, line)) throw SchemaError("truncated doc-topic table");
    std::istringstream ss(line);
    for (int k = 0; k < m.K_; ++k) {
      if (!(ss >> m.n_kd_[d * m.K_ + k])) throw SchemaError("bad doc-topic row");
    }
  }
  m.check_invariants();
  return m;
}

}  // namespace w5h
