#include "w5h/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;

namespace w5h {

RawEmail parse_rfc822(std::string_view raw) {
  RawEmail m;
  size_t pos = 0;
  bool separator_seen = false;
  std::string cur_name, cur_value;
  auto flush = [&] {
    if (!cur_name.empty()) m.headers.emplace_back(std::move(cur_name), collapse_ws(cur_value));
    cur_name.clear();
    cur_value.clear();
  };
  while (pos < raw.size()) {
    size_t eol = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? raw.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {  // header/body separator
      flush();
      separator_seen = true;
      m.body.assign(raw.substr(pos));
      break;
    }
    if (line[0] == ' ' || line[0] == '\t') {  // folded continuation
      if (cur_name.empty()) throw MalformedMessage("continuation line before any header");
      cur_value.push_back(' ');
      cur_value.append(line);
      continue;
    }
    size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw MalformedMessage("header line without ':'");
    flush();
    cur_name = std::string(line.substr(0, colon));
    cur_value = std::string(line.substr(colon + 1));
  }
  flush();
  if (!separator_seen) throw MalformedMessage("no header/body separator");
  if (m.headers.empty()) throw MalformedMessage("empty header block");
  return m;
}

std::optional<std::string> header_value(const RawEmail& m, std::string_view name) {
  for (const auto& [n, v] : m.headers) {
    if (n.size() == name.size() &&
        std::equal(n.begin(), n.end(), name.begin(),
                   [](unsigned char a, unsigned char b) { return std::tolower(a) == std::tolower(b); })) {
      return v;
    }
  }
  return std::nullopt;
}

std::vector<std::string> split_address_list(std::string_view header) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;  // do not split inside quoted "Last, First" display names
  bool in_quote = false;
  for (char c : header) {
    if (c == '"') in_quote = !in_quote;
    if (c == '<') ++depth;
    if (c == '>') depth = std::max(0, depth - 1);
    if (c == ',' && depth == 0 && !in_quote) {
      if (!collapse_ws(cur).empty()) out.push_back(collapse_ws(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!collapse_ws(cur).empty()) out.push_back(collapse_ws(cur));
  return out;
}

namespace {

// Entity lists stay duplicate-free (the same address often sits in several
// headers); what keeps duplicates because term frequency matters there.
void add_entity(ItemList& list, std::string item) {
  if (item.empty()) return;
  if (std::find(list.begin(), list.end(), item) != list.end()) return;
  list.push_back(std::move(item));
}

void add_entities(ItemList& who, std::string_view header, const AliasTable* aliases) {
  for (const std::string& part : split_address_list(header)) {
    for (std::string& item : entity_items(part, aliases)) add_entity(who, std::move(item));
  }
}

}  // namespace

TraceObject parse_enron_message(std::string_view raw, const std::string& mailbox_owner,
                                const std::string& folder, const AliasTable* aliases,
                                std::string_view path_hint) {
  RawEmail m = parse_rfc822(raw);
  TraceObject o;

  for (const char* h : {"From", "To", "Cc", "Bcc"}) {
    for (const auto& [n, v] : m.headers) {
      if (to_lower(n) == to_lower(h)) add_entities(o.items(Dim::Who), v, aliases);
    }
  }

  if (auto date = header_value(m, "Date")) {
    o.items(Dim::When) = normalize_when(*date);  // unparseable -> stays empty
  }

  std::string text;
  if (auto subject = header_value(m, "Subject")) text = *subject + "\n";
  text += strip_html(m.body);
  o.items(Dim::What) = what_terms(text);

  o.items(Dim::How).push_back("email:" + mailbox_owner + "/" + folder);

  std::string key = header_value(m, "Message-ID").value_or(std::string(path_hint));
  uint64_t h = fnv1a64(mailbox_owner);
  h = fnv1a64("\x1f", 1, h);
  h = fnv1a64(folder, h);
  h = fnv1a64("\x1f", 1, h);
  h = fnv1a64(key, h);
  o.id = "em-" + hex64(h);
  return o;
}

Dataset ingest_maildir(const std::string& root, const AliasTable* aliases, IngestStats* stats,
                       int n_threads) {
  if (!fs::is_directory(root)) throw MissingArtifact("maildir root not found: " + root);

  struct Entry {
    std::string path, owner, folder;
  };
  std::vector<Entry> files;
  for (const auto& owner_it : fs::directory_iterator(root)) {
    if (!owner_it.is_directory()) continue;
    const std::string owner = owner_it.path().filename().string();
    for (auto it = fs::recursive_directory_iterator(owner_it.path()); it != fs::recursive_directory_iterator(); ++it) {
      if (!it->is_regular_file()) continue;
      std::string folder = fs::relative(it->path().parent_path(), owner_it.path()).generic_string();
      if (folder == ".") folder = "";
      files.push_back({it->path().string(), owner, folder});
    }
  }
  std::sort(files.begin(), files.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });

  std::vector<std::optional<TraceObject>> parsed(files.size());
  std::vector<char> failed(files.size(), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) num_threads(n_threads > 0 ? n_threads : omp_get_max_threads())
#endif
  for (size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i].path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      parsed[i] = parse_enron_message(buf.str(), files[i].owner, files[i].folder, aliases, files[i].path);
    } catch (const MalformedMessage&) {
      failed[i] = 1;
    }
  }

  Dataset d;
  IngestStats local;
  for (size_t i = 0; i < files.size(); ++i) {
    if (failed[i]) {
      ++local.skipped;
      continue;
    }
    try {
      d.add(std::move(*parsed[i]));
      ++local.parsed;
    } catch (const SchemaError&) {  // duplicate id (message copied within a folder)
      ++local.duplicates;
    }
  }
  d.freeze();
  if (stats) *stats = local;
  return d;
}

namespace {

ItemList normalize_record_items(Dim d, const std::vector<std::string>& values, const AliasTable* aliases) {
  ItemList out;
  for (const std::string& v : values) {
    switch (item_kind(d)) {
      case ItemKind::Term: {
        for (std::string& t : what_terms(v)) out.push_back(std::move(t));
        break;
      }
      case ItemKind::Entity:
      case ItemKind::Location: {
        // entity_items + dedup keeps canonical lines (display form followed
        // by the address alias) stable under re-parsing
        for (std::string& item : entity_items(v, aliases)) add_entity(out, std::move(item));
        break;
      }
      case ItemKind::TimeToken: {
        if (time_token_granularity(v)) {
          out.push_back(v);  // already canonical
        } else {
          for (std::string& t : normalize_when(v)) out.push_back(std::move(t));
        }
        break;
      }
      case ItemKind::SourceTag: {
        std::string c = collapse_ws(to_lower(v));
        if (!c.empty()) out.push_back(std::move(c));
        break;
      }
    }
  }
  return out;
}

}  // namespace

TraceObject parse_trace_record(std::string_view line, const AliasTable* aliases) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("record is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw SchemaError("record missing string \"id\"");
  }
  if (!j.contains("dims") || !j["dims"].is_object()) {
    throw SchemaError("record missing \"dims\" object");
  }
  TraceObject o;
  o.id = j["id"].get<std::string>();
  for (const auto& [key, value] : j["dims"].items()) {
    auto d = dim_from_name(key);
    if (!d) throw SchemaError("unknown dimension \"" + key + "\"");
    if (!value.is_array()) throw SchemaError("dimension \"" + key + "\" is not a list");
    if (*d == Dim::Why && !value.empty()) throw SchemaError("why dimension must be empty");
    std::vector<std::string> values;
    for (const auto& item : value) {
      if (!item.is_string()) throw SchemaError("non-string item under \"" + key + "\"");
      values.push_back(item.get<std::string>());
    }
    o.items(*d) = normalize_record_items(*d, values, aliases);
  }
  return o;
}

Dataset load_dataset(const std::string& path, const AliasTable* aliases) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("dataset file not found: " + path);
  Dataset d;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      d.add(parse_trace_record(line, aliases));
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  d.freeze();
  return d;
}

AliasTable load_alias_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("alias table not found: " + path);
  AliasTable t;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": expected alias<TAB>canonical");
    }
    t[collapse_ws(to_lower(line.substr(0, tab)))] = collapse_ws(to_lower(line.substr(tab + 1)));
  }
  return t;
}

}  // namespace w5h
