#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "w5h/common.hpp"
#include "w5h/dimension.hpp"

namespace w5h {

// Items are normalized strings; their kind is fixed by the dimension they
// live in (see item_kind).
using Item = std::string;
using ItemList = std::vector<Item>;

struct QueryObject {
  std::array<ItemList, kNumDims> dims;

  const ItemList& items(Dim d) const { return dims[static_cast<size_t>(d)]; }
  ItemList& items(Dim d) { return dims[static_cast<size_t>(d)]; }

  bool empty() const;
  // Feature dimensions with at least one item.
  DimMask present_mask() const;
};

struct TraceObject {
  std::string id;
  std::array<ItemList, kNumDims> dims;

  const ItemList& items(Dim d) const { return dims[static_cast<size_t>(d)]; }
  ItemList& items(Dim d) { return dims[static_cast<size_t>(d)]; }

  bool contains(Dim d, const Item& item) const;
  DimMask present_mask() const;
};

// True iff some dimension of q shares at least one item with o. Items match
// by exact equality of their normalized form; multi-granularity time tokens
// make partial date matches fall out of plain equality.
bool matches(const QueryObject& q, const TraceObject& o);

// Append-only until freeze(), immutable afterwards. Freezing sorts objects
// by id so downstream artifacts never depend on insertion (or thread) order.
class Dataset {
 public:
  void add(TraceObject obj);
  void freeze();
  bool frozen() const { return frozen_; }

  size_t size() const { return objects_.size(); }
  const TraceObject& at(size_t ordinal) const { return objects_[ordinal]; }
  const std::vector<TraceObject>& objects() const { return objects_; }

  std::optional<uint32_t> ordinal_of(const std::string& id) const;
  const TraceObject* find(const std::string& id) const;

 private:
  std::vector<TraceObject> objects_;
  std::unordered_map<std::string, uint32_t> by_id_;
  bool frozen_ = false;
};

// Canonical one-record-per-line serialization:
//   {"id":"...","dims":{"what":[...],"who":[...],"when":[...],"where":[...],"how":[...]}}
// Field order is fixed so output is byte-reproducible.
std::string to_record_line(const TraceObject& o);
std::string query_to_record(const QueryObject& q);  // the "dims" part only

void save_dataset(const Dataset& d, const std::string& path);

}  // namespace w5h
