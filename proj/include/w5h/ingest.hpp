#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "w5h/object.hpp"
#include "w5h/textnorm.hpp"

namespace w5h {

struct RawEmail {
  // Name/value pairs in file order; names are matched case-insensitively and
  // duplicates are preserved.
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

// Splits an RFC-822-style message into headers and body, unfolding continued
// header lines. Throws MalformedMessage when there is no header/body
// separator.
RawEmail parse_rfc822(std::string_view raw);

std::optional<std::string> header_value(const RawEmail& m, std::string_view name);
std::vector<std::string> split_address_list(std::string_view header);

// Maps one Enron message onto the six dimensions: who from From/To/Cc, when
// from Date, what from Subject + body, how = "email:<owner>/<folder>". The id
// is a stable hash of (owner, folder, Message-ID or path).
TraceObject parse_enron_message(std::string_view raw, const std::string& mailbox_owner,
                                const std::string& folder, const AliasTable* aliases = nullptr,
                                std::string_view path_hint = {});

struct IngestStats {
  size_t parsed = 0;
  size_t skipped = 0;   // malformed messages
  size_t duplicates = 0;
};

// Walks <root>/<owner>/<folder...>/<file>. Files parse in parallel; the
// frozen dataset is id-sorted, so results do not depend on thread count.
Dataset ingest_maildir(const std::string& root, const AliasTable* aliases = nullptr,
                       IngestStats* stats = nullptr, int n_threads = 0);

// Parses one canonical record line, re-applying all normalizations (a
// canonical line round-trips unchanged). Non-canonical item values are
// normalized: entities canonicalized, free-form dates expanded to tokens,
// what text tokenized and stopword-filtered.
TraceObject parse_trace_record(std::string_view line, const AliasTable* aliases = nullptr);

Dataset load_dataset(const std::string& path, const AliasTable* aliases = nullptr);

// Tab-separated "alias<TAB>canonical" lines; '#' lines are comments.
AliasTable load_alias_table(const std::string& path);

}  // namespace w5h
