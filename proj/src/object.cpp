#include "w5h/object.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace w5h {

std::optional<Dim> dim_from_name(std::string_view name) {
  for (int i = 0; i < kNumDims; ++i) {
    if (dim_name(static_cast<Dim>(i)) == name) return static_cast<Dim>(i);
  }
  return std::nullopt;
}

bool QueryObject::empty() const {
  for (const auto& l : dims)
    if (!l.empty()) return false;
  return true;
}

DimMask QueryObject::present_mask() const {
  DimMask m = 0;
  for (Dim d : kFeatureDims)
    if (!items(d).empty()) m |= dim_bit(d);
  return m;
}

bool TraceObject::contains(Dim d, const Item& item) const {
  const auto& l = items(d);
  return std::find(l.begin(), l.end(), item) != l.end();
}

DimMask TraceObject::present_mask() const {
  DimMask m = 0;
  for (Dim d : kFeatureDims)
    if (!items(d).empty()) m |= dim_bit(d);
  return m;
}

bool matches(const QueryObject& q, const TraceObject& o) {
  for (int i = 0; i < kNumDims; ++i) {
    const Dim d = static_cast<Dim>(i);
    for (const Item& it : q.items(d)) {
      if (o.contains(d, it)) return true;
    }
  }
  return false;
}

void Dataset::add(TraceObject obj) {
  if (frozen_) throw SchemaError("dataset is frozen");
  if (obj.id.empty()) throw SchemaError("object with empty id");
  auto [it, inserted] = by_id_.emplace(obj.id, static_cast<uint32_t>(objects_.size()));
  if (!inserted) throw SchemaError("duplicate object id: " + obj.id);
  objects_.push_back(std::move(obj));
}

void Dataset::freeze() {
  if (frozen_) return;
  std::sort(objects_.begin(), objects_.end(),
            [](const TraceObject& a, const TraceObject& b) { return a.id < b.id; });
  by_id_.clear();
  by_id_.reserve(objects_.size());
  for (uint32_t i = 0; i < objects_.size(); ++i) by_id_.emplace(objects_[i].id, i);
  frozen_ = true;
}

std::optional<uint32_t> Dataset::ordinal_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const TraceObject* Dataset::find(const std::string& id) const {
  auto ord = ordinal_of(id);
  return ord ? &objects_[*ord] : nullptr;
}

static nlohmann::ordered_json dims_to_json(const std::array<ItemList, kNumDims>& dims) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (Dim d : kFeatureDims) {
    j[std::string(dim_name(d))] = dims[static_cast<size_t>(d)];
  }
  return j;
}

std::string to_record_line(const TraceObject& o) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["id"] = o.id;
  j["dims"] = dims_to_json(o.dims);
  return j.dump();
}

std::string query_to_record(const QueryObject& q) { return dims_to_json(q.dims).dump(); }

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  for (const TraceObject& o : d.objects()) out << to_record_line(o) << '\n';
}

}  // namespace w5h
