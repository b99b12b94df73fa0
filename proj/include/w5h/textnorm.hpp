#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace w5h {

// Lowercases ASCII and splits on non-alphanumeric bytes. Bytes >= 0x80 are
// kept as token characters so multi-byte UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view token);

// tokenize + stopword filter: the item form of the what dimension.
std::vector<std::string> what_terms(std::string_view text);

// Removes <...> tag spans and collapses character entities to spaces.
std::string strip_html(std::string_view text);

std::string to_lower(std::string_view s);
std::string collapse_ws(std::string_view s);

// ---- when normalization ---------------------------------------------------
//
// Multi-granularity time tokens. A full calendar date yields
// {YYYY, YYYY-MM, YYYY-MM-DD, month:MM}; a year-month yields
// {YYYY, YYYY-MM, month:MM}; a bare year yields {YYYY}. Anything that does
// not parse yields the empty list.
std::vector<std::string> normalize_when(std::string_view date_text);

// Token builder for an already-parsed date (month/day may be 0 = absent).
std::vector<std::string> time_tokens(int year, int month, int day);

enum class TimeGranularity { Day = 3, YearMonth = 2, Year = 1, MonthOfYear = 0 };
std::optional<TimeGranularity> time_token_granularity(std::string_view token);

// ---- entity canonicalization ----------------------------------------------

using AliasTable = std::unordered_map<std::string, std::string>;

// Lowercase + whitespace collapse; for email addresses the local part with
// '.', '_', '-' turned into spaces becomes the display form and the domain is
// dropped. Alias-table entries (exact match on the canonical form) apply last.
std::string canonicalize_entity(std::string_view name_or_address, const AliasTable* aliases = nullptr);

// Canonical form plus, for addresses, the full lowercased address kept as a
// second item so queries by either form match.
std::vector<std::string> entity_items(std::string_view raw, const AliasTable* aliases = nullptr);

}  // namespace w5h
