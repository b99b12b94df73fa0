#include "w5h/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace w5h {

void Bm25Params::validate() const {
  if (k1 < 0) throw ConfigError("bm25 k1 must be >= 0");
  if (b < 0 || b > 1) throw ConfigError("bm25 b must be in [0, 1]");
  for (double w : field_weights) {
    if (w < 0) throw ConfigError("bm25 field weights must be >= 0");
  }
}

InvertedIndex InvertedIndex::build(const Dataset& d) {
  if (!d.frozen()) throw SchemaError("dataset must be frozen before indexing");
  InvertedIndex idx;
  idx.n_docs_ = static_cast<uint32_t>(d.size());
  idx.ids_.reserve(d.size());
  for (int f = 0; f < kNumFields; ++f) idx.len_[f].assign(d.size(), 0);

  std::unordered_map<std::string, uint32_t> tf;  // scratch, reused per field
  for (uint32_t doc = 0; doc < d.size(); ++doc) {
    const TraceObject& o = d.at(doc);
    idx.ids_.push_back(o.id);
    idx.by_id_.emplace(o.id, doc);
    for (Dim dim : kFeatureDims) {
      const int f = static_cast<int>(dim);
      const ItemList& items = o.items(dim);
      if (items.empty()) continue;
      tf.clear();
      for (const Item& it : items) ++tf[it];
      for (const auto& [term, count] : tf) {
        idx.postings_[f][term].push_back({doc, count});
      }
      idx.len_[f][doc] = static_cast<uint32_t>(items.size());
      idx.total_len_[f] += items.size();
    }
    // concatenated pseudo-field: the multiset union of all dimension items
    tf.clear();
    uint64_t all_len = 0;
    for (Dim dim : kFeatureDims) {
      for (const Item& it : o.items(dim)) {
        ++tf[it];
        ++all_len;
      }
    }
    for (const auto& [term, count] : tf) {
      idx.postings_[kAllField][term].push_back({doc, count});
    }
    idx.len_[kAllField][doc] = static_cast<uint32_t>(all_len);
    idx.total_len_[kAllField] += all_len;
  }
  return idx;
}

std::optional<uint32_t> InvertedIndex::ordinal(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

uint32_t InvertedIndex::resolve(const std::string& id) const {
  auto ord = ordinal(id);
  if (!ord) throw UnknownObject("unknown object id: " + id);
  return *ord;
}

double InvertedIndex::avg_len(int field) const {
  return n_docs_ == 0 ? 0.0 : static_cast<double>(total_len_[field]) / n_docs_;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term, int field) const {
  auto it = postings_[field].find(term);
  return it == postings_[field].end() ? nullptr : &it->second;
}

uint32_t InvertedIndex::doc_freq(const std::string& term, int field) const {
  const auto* p = postings(term, field);
  return p ? static_cast<uint32_t>(p->size()) : 0;
}

uint32_t InvertedIndex::term_freq(const std::string& term, uint32_t doc, int field) const {
  const auto* p = postings(term, field);
  if (!p) return 0;
  auto it = std::lower_bound(p->begin(), p->end(), doc,
                             [](const Posting& a, uint32_t b) { return a.doc < b; });
  return (it != p->end() && it->doc == doc) ? it->tf : 0;
}

double InvertedIndex::idf(const std::string& term) const {
  const double df = doc_freq(term, kAllField);
  return std::log(1.0 + (n_docs_ - df + 0.5) / (df + 0.5));
}

double bm25_score_doc(const QueryObject& q, uint32_t doc, const InvertedIndex& idx, const Bm25Params& p) {
  const double avg = idx.avg_len(InvertedIndex::kAllField);
  if (avg == 0) return 0.0;
  const double norm = 1.0 - p.b + p.b * idx.field_len(doc, InvertedIndex::kAllField) / avg;
  double score = 0.0;
  for (int d = 0; d < kNumDims; ++d) {
    for (const Item& t : q.dims[d]) {
      const double tf = idx.term_freq(t, doc, InvertedIndex::kAllField);
      if (tf == 0) continue;
      score += idx.idf(t) * tf / (tf + p.k1 * norm);
    }
  }
  return score;
}

double bm25_score(const QueryObject& q, const std::string& object_id, const InvertedIndex& idx,
                  const Bm25Params& p) {
  return bm25_score_doc(q, idx.resolve(object_id), idx, p);
}

double bm25f_score_doc(const QueryObject& q, uint32_t doc, const InvertedIndex& idx, const Bm25Params& p,
                       DimMask dims) {
  double score = 0.0;
  for (Dim dim : kFeatureDims) {
    if (!mask_has(dims, dim)) continue;
    const int f = static_cast<int>(dim);
    const double avg = idx.avg_len(f);
    if (avg == 0) continue;
    const double norm = 1.0 - p.b + p.b * idx.field_len(doc, f) / avg;
    const double w = p.field_weights[f];
    if (w == 0) continue;
    for (const Item& t : q.items(dim)) {
      const double tf = idx.term_freq(t, doc, f);
      if (tf == 0) continue;
      const double wtf = w * tf / norm;
      score += idx.idf(t) * wtf / (p.k1 + wtf);
    }
  }
  return score;
}

double bm25f_score(const QueryObject& q, const std::string& object_id, const InvertedIndex& idx,
                   const Bm25Params& p) {
  return bm25f_score_doc(q, idx.resolve(object_id), idx, p);
}

namespace {

std::vector<ScoredDoc> rank_and_cap(std::vector<uint32_t>& docs, size_t cap,
                                    const std::function<double(uint32_t)>& score) {
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  std::vector<ScoredDoc> out;
  out.reserve(docs.size());
  for (uint32_t doc : docs) out.push_back({doc, score(doc)});
  std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;  // doc order is id order
  });
  if (out.size() > cap) out.resize(cap);
  return out;
}

}  // namespace

std::vector<ScoredDoc> retrieve_candidates(const QueryObject& q, const InvertedIndex& idx,
                                           const Bm25Params& p, size_t cap) {
  std::vector<uint32_t> docs;
  for (Dim dim : kFeatureDims) {
    for (const Item& t : q.items(dim)) {
      if (const auto* post = idx.postings(t, static_cast<int>(dim))) {
        for (const Posting& e : *post) docs.push_back(e.doc);
      }
    }
  }
  return rank_and_cap(docs, cap, [&](uint32_t doc) { return bm25f_score_doc(q, doc, idx, p); });
}

std::vector<ScoredDoc> retrieve_bm25(const QueryObject& q, const InvertedIndex& idx, const Bm25Params& p,
                                     size_t cap) {
  std::vector<uint32_t> docs;
  for (int d = 0; d < kNumDims; ++d) {
    for (const Item& t : q.dims[d]) {
      if (const auto* post = idx.postings(t, InvertedIndex::kAllField)) {
        for (const Posting& e : *post) docs.push_back(e.doc);
      }
    }
  }
  return rank_and_cap(docs, cap, [&](uint32_t doc) { return bm25_score_doc(q, doc, idx, p); });
}

// ---- persistence -------------------------------------------------------------

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << "w5h-index v1\n";
  out << "docs " << n_docs_ << "\n";
  for (uint32_t d = 0; d < n_docs_; ++d) {
    out << ids_[d];
    for (int f = 0; f < kNumFields; ++f) out << '\t' << len_[f][d];
    out << '\n';
  }
  for (int f = 0; f < kNumFields; ++f) {
    out << "field " << f << " terms " << postings_[f].size() << "\n";
    std::map<std::string_view, const std::vector<Posting>*> sorted;
    for (const auto& [term, posts] : postings_[f]) sorted.emplace(term, &posts);
    for (const auto& [term, posts] : sorted) {
      out << term << '\t' << posts->size();
      for (const Posting& e : *posts) out << '\t' << e.doc << ':' << e.tf;
      out << '\n';
    }
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

}  // namespace

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("index file not found: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "w5h-index v1") throw SchemaError("bad index header in " + path);
  InvertedIndex idx;
  if (!std::getline(in, line) || line.rfind("docs ", 0) != 0) throw SchemaError("missing doc count");
  idx.n_docs_ = static_cast<uint32_t>(std::stoul(line.substr(5)));
  for (int f = 0; f < kNumFields; ++f) idx.len_[f].assign(idx.n_docs_, 0);
  for (uint32_t d = 0; d < idx.n_docs_; ++d) {
    if (!std::getline(in, line)) throw SchemaError("truncated index doc table");
    auto parts = split_tabs(line);
    if (parts.size() != 1 + kNumFields) throw SchemaError("bad doc line: " + line);
    idx.ids_.push_back(parts[0]);
    idx.by_id_.emplace(parts[0], d);
    for (int f = 0; f < kNumFields; ++f) {
      idx.len_[f][d] = static_cast<uint32_t>(std::stoul(parts[1 + f]));
      idx.total_len_[f] += idx.len_[f][d];
    }
  }
  for (int f = 0; f < kNumFields; ++f) {
    if (!std::getline(in, line)) throw SchemaError("truncated index field table");
    size_t terms_pos = line.find(" terms ");
    if (line.rfind("field ", 0) != 0 || terms_pos == std::string::npos)
      throw SchemaError("bad field header: " + line);
    const size_t n_terms = std::stoul(line.substr(terms_pos + 7));
    for (size_t t = 0; t < n_terms; ++t) {
      if (!std::getline(in, line)) throw SchemaError("truncated postings");
      auto parts = split_tabs(line);
      if (parts.size() < 2) throw SchemaError("bad postings line: " + line);
      const size_t n_post = std::stoul(parts[1]);
      if (parts.size() != 2 + n_post) throw SchemaError("postings count mismatch: " + line);
      std::vector<Posting> posts;
      posts.reserve(n_post);
      for (size_t i = 0; i < n_post; ++i) {
        const std::string& entry = parts[2 + i];
        size_t colon = entry.rfind(':');
        if (colon == std::string::npos) throw SchemaError("bad posting entry: " + entry);
        posts.push_back({static_cast<uint32_t>(std::stoul(entry.substr(0, colon))),
                         static_cast<uint32_t>(std::stoul(entry.substr(colon + 1)))});
      }
      idx.postings_[f].emplace(parts[0], std::move(posts));
    }
  }
  return idx;
}

}  // namespace w5h
