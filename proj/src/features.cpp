#include "w5h/features.hpp"

#include <algorithm>
#include <fstream>

namespace w5h {

namespace {

std::array<DimMask, 31> build_subset_table() {
  std::array<DimMask, 31> table{};
  int next = 1;
  for (int size = 1; size <= 4; ++size) {
    // combinations of {0..4} choose `size`, lexicographic
    std::array<int, 4> c{};
    for (int i = 0; i < size; ++i) c[i] = i;
    while (true) {
      DimMask m = 0;
      for (int i = 0; i < size; ++i) m |= static_cast<DimMask>(1u << c[i]);
      table[next++] = m;
      int i = size - 1;
      while (i >= 0 && c[i] == kNumFeatureDims - size + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < size; ++j) c[j] = c[j - 1] + 1;
    }
  }
  return table;
}

}  // namespace

const std::array<DimMask, 31>& subset_table() {
  static const std::array<DimMask, 31> table = build_subset_table();
  return table;
}

int subset_index(DimMask s) {
  const int size = mask_size(s);
  if (size < 1 || size > 4 || (s & ~kAllFeatureDims)) {
    throw InvalidSubset("subset must have 1..4 of the five feature dimensions");
  }
  const auto& table = subset_table();
  for (int i = 1; i <= 30; ++i) {
    if (table[i] == s) return i;
  }
  throw InvalidSubset("unmapped subset");  // unreachable for valid masks
}

DimMask subset_of_index(int index) {
  if (index < 1 || index > 30) throw InvalidSubset("subset index must be in 1..30");
  return subset_table()[index];
}

std::string subset_name(DimMask s) {
  std::string out;
  for (Dim d : kFeatureDims) {
    if (!mask_has(s, d)) continue;
    if (!out.empty()) out += ",";
    out += dim_name(d);
  }
  return out;
}

DimMask group_extra_dims(int index) {
  switch (index) {
    case 31: return 0;
    case 32: return dim_bit(Dim::When);
    case 33: return dim_bit(Dim::How);
    case 34: return dim_bit(Dim::When) | dim_bit(Dim::Where);
  }
  throw InvalidSubset("group feature index must be in 31..34");
}

FeatureExtractor::FeatureExtractor(const Dataset& d, const InvertedIndex& idx, const TopicModel& m,
                                   Bm25Params params)
    : dataset_(d), index_(idx), topics_(m), params_(std::move(params)) {
  params_.validate();
  dominant_.assign(d.size(), -1);
  topic_docs_.assign(m.K(), DocBits(d.size()));
  for (uint32_t doc = 0; doc < d.size(); ++doc) {
    if (auto corpus_doc = m.doc_index(d.at(doc).id)) {
      const int k = m.dominant_topic_of_doc(*corpus_doc);
      dominant_[doc] = k;
      topic_docs_[k].set(doc);
    }
  }
}

DocBits FeatureExtractor::bits_for_item(Dim d, const Item& item) const {
  DocBits bits(dataset_.size());
  if (const auto* post = index_.postings(item, static_cast<int>(d))) {
    for (const Posting& e : *post) bits.set(e.doc);
  }
  return bits;
}

FeatureExtractor::QueryContext FeatureExtractor::prepare(const QueryObject& q) const {
  QueryContext ctx;
  ctx.query = q;
  if (!q.items(Dim::What).empty()) ctx.topic = topics_.query_topic(q.items(Dim::What));

  for (Dim d : {Dim::Who, Dim::When, Dim::Where, Dim::How}) {
    const ItemList& items = q.items(d);
    if (items.empty()) continue;
    auto& bits = ctx.item_bits[static_cast<size_t>(d)];
    bits.reserve(items.size());
    for (const Item& it : items) bits.push_back(bits_for_item(d, it));
    ctx.active |= dim_bit(d);
  }
  // The what combination item is the query topic; objects participate through
  // their dominant topic.
  if (ctx.topic) ctx.active |= dim_bit(Dim::What);

  auto entry_sets = [&](Dim d) -> std::vector<const DocBits*> {
    std::vector<const DocBits*> out;
    if (d == Dim::What) {
      out.push_back(&topic_docs_[*ctx.topic]);
    } else {
      for (const DocBits& b : ctx.item_bits[static_cast<size_t>(d)]) out.push_back(&b);
    }
    return out;
  };

  for (int idx = 2; idx <= 30; ++idx) {
    const DimMask mask = subset_of_index(idx);
    if ((mask & ~ctx.active) != 0) continue;
    std::vector<Dim> dims;
    for (Dim d : kFeatureDims) {
      if (mask_has(mask, d)) dims.push_back(d);
    }
    std::vector<std::vector<const DocBits*>> choices;
    for (Dim d : dims) choices.push_back(entry_sets(d));
    // cartesian expansion: a multi-valued dimension sums over each value
    std::vector<size_t> pick(dims.size(), 0);
    while (true) {
      Tuple t;
      t.arity = static_cast<int>(dims.size());
      std::vector<const DocBits*> sets;
      for (size_t i = 0; i < dims.size(); ++i) {
        t.bits[i] = choices[i][pick[i]];
        sets.push_back(t.bits[i]);
      }
      t.count = DocBits::intersection_count(sets);
      ctx.subsets[idx].push_back(t);
      size_t i = 0;
      while (i < pick.size() && ++pick[i] == choices[i].size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  }

  // who-group features need >= 2 distinct who entities all contained in the
  // candidate; singletons would duplicate the plain who features.
  const ItemList& who = q.items(Dim::Who);
  std::vector<size_t> distinct;
  for (size_t i = 0; i < who.size(); ++i) {
    bool seen = false;
    for (size_t j = 0; j < i && !seen; ++j) seen = who[j] == who[i];
    if (!seen) distinct.push_back(i);
  }
  if (distinct.size() >= 2) {
    for (size_t i : distinct) ctx.group_gate.push_back(&ctx.item_bits[static_cast<size_t>(Dim::Who)][i]);
    ctx.group_count = DocBits::intersection_count(ctx.group_gate);
    auto with_extra = [&](const DocBits* extra) {
      std::vector<const DocBits*> sets = ctx.group_gate;
      sets.push_back(extra);
      return DocBits::intersection_count(sets);
    };
    for (const DocBits& wb : ctx.item_bits[static_cast<size_t>(Dim::When)]) {
      ctx.group_when.emplace_back(&wb, with_extra(&wb));
    }
    for (const DocBits& hb : ctx.item_bits[static_cast<size_t>(Dim::How)]) {
      ctx.group_how.emplace_back(&hb, with_extra(&hb));
    }
    for (const DocBits& wb : ctx.item_bits[static_cast<size_t>(Dim::When)]) {
      for (const DocBits& lb : ctx.item_bits[static_cast<size_t>(Dim::Where)]) {
        std::vector<const DocBits*> sets = ctx.group_gate;
        sets.push_back(&wb);
        sets.push_back(&lb);
        ctx.group_when_where.push_back({&wb, &lb, DocBits::intersection_count(sets)});
      }
    }
  }
  return ctx;
}

FeatureVector FeatureExtractor::extract(const QueryContext& ctx, uint32_t doc) const {
  FeatureVector out;
  if (!ctx.query.items(Dim::What).empty()) {
    out.set_x(1, bm25f_score_doc(ctx.query, doc, index_, params_, dim_bit(Dim::What)));
  }
  for (int idx = 2; idx <= 30; ++idx) {
    uint64_t total = 0;
    for (const Tuple& t : ctx.subsets[idx]) {
      bool contained = true;
      for (int i = 0; i < t.arity && contained; ++i) contained = t.bits[i]->test(doc);
      if (contained) total += t.count;  // the candidate itself is in the count
    }
    if (total) out.set_x(idx, static_cast<double>(total));
  }
  if (!ctx.group_gate.empty()) {
    bool has_group = true;
    for (const DocBits* g : ctx.group_gate) has_group = has_group && g->test(doc);
    if (has_group) {
      out.set_x(31, static_cast<double>(ctx.group_count));
      uint64_t x32 = 0, x33 = 0, x34 = 0;
      for (const auto& [bits, count] : ctx.group_when) {
        if (bits->test(doc)) x32 += count;
      }
      for (const auto& [bits, count] : ctx.group_how) {
        if (bits->test(doc)) x33 += count;
      }
      for (const auto& gw : ctx.group_when_where) {
        if (gw.when_bits->test(doc) && gw.where_bits->test(doc)) x34 += gw.count;
      }
      out.set_x(32, static_cast<double>(x32));
      out.set_x(33, static_cast<double>(x33));
      out.set_x(34, static_cast<double>(x34));
    }
  }
  return out;
}

FeatureVector FeatureExtractor::extract(const QueryObject& q, const std::string& object_id) const {
  return extract(prepare(q), index_.resolve(object_id));
}

uint64_t FeatureExtractor::frequency(DimMask s, const QueryObject& q, const std::string& object_id) const {
  const int idx = subset_index(s);
  QueryContext ctx = prepare(q);
  const uint32_t doc = index_.resolve(object_id);
  uint64_t total = 0;
  for (const Tuple& t : ctx.subsets[idx]) {
    bool contained = true;
    for (int i = 0; i < t.arity && contained; ++i) contained = t.bits[i]->test(doc);
    if (contained) total += t.count;
  }
  return total;
}

// ---- feature file -------------------------------------------------------------

std::string feature_line(const FeatureFileEntry& e) {
  std::string out = std::to_string(e.label) + " qid:" + std::to_string(e.qid);
  for (int i = 1; i <= kNumFeatures; ++i) {
    out += " " + std::to_string(i) + ":" + format_value(e.x.x(i));
  }
  out += " # " + e.object_id;
  return out;
}

FeatureFileEntry parse_feature_line(std::string_view line) {
  FeatureFileEntry e;
  size_t hash = line.rfind(" # ");
  if (hash == std::string_view::npos) throw SchemaError("feature line missing '# <object id>'");
  e.object_id = std::string(line.substr(hash + 3));
  std::string_view head = line.substr(0, hash);

  std::vector<std::string_view> fields;
  size_t pos = 0;
  while (pos < head.size()) {
    size_t sp = head.find(' ', pos);
    if (sp == std::string_view::npos) sp = head.size();
    if (sp > pos) fields.push_back(head.substr(pos, sp - pos));
    pos = sp + 1;
  }
  if (fields.size() != 2 + kNumFeatures) {
    throw ArityMismatch("expected label, qid and 34 features, got " + std::to_string(fields.size()) +
                        " fields");
  }
  e.label = static_cast<int>(parse_double(fields[0]));
  if (fields[1].rfind("qid:", 0) != 0) throw SchemaError("missing qid: field");
  e.qid = static_cast<uint32_t>(parse_double(fields[1].substr(4)));
  for (int i = 1; i <= kNumFeatures; ++i) {
    std::string_view f = fields[1 + i];
    size_t colon = f.find(':');
    if (colon == std::string_view::npos) throw SchemaError("bad feature field");
    if (parse_double(f.substr(0, colon)) != i) {
      throw ArityMismatch("feature indices must be dense 1..34");
    }
    e.x.set_x(i, parse_double(f.substr(colon + 1)));
  }
  return e;
}

void write_feature_file(const std::vector<FeatureFileEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  for (const FeatureFileEntry& e : entries) out << feature_line(e) << '\n';
}

std::vector<FeatureFileEntry> read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("feature file not found: " + path);
  std::vector<FeatureFileEntry> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_feature_line(line));
    } catch (const std::runtime_error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace w5h
