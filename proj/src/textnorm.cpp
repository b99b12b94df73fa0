#include "w5h/textnorm.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "w5h/common.hpp"

namespace w5h {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;  // trims leading whitespace
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(c));
      in_ws = false;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an",
      "and", "any", "are", "aren", "as", "at", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "can", "cannot", "could",
      "couldn", "d", "did", "didn", "do", "does", "doesn", "doing", "don", "down",
      "during", "each", "few", "for", "from", "further", "had", "hadn", "has",
      "hasn", "have", "haven", "having", "he", "her", "here", "hers", "herself",
      "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it",
      "its", "itself", "just", "ll", "m", "ma", "me", "might", "mightn", "more",
      "most", "must", "mustn", "my", "myself", "needn", "no", "nor", "not", "now",
      "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "re", "s", "same", "shan", "she",
      "should", "shouldn", "so", "some", "such", "t", "than", "that", "the",
      "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "ve",
      "very", "was", "wasn", "we", "were", "weren", "what", "when", "where",
      "which", "while", "who", "whom", "why", "will", "with", "won", "would",
      "wouldn", "y", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

}  // namespace

bool is_stopword(std::string_view token) { return stopwords().count(token) > 0; }

std::vector<std::string> what_terms(std::string_view text) {
  std::vector<std::string> out = tokenize(text);
  std::erase_if(out, [](const std::string& t) { return is_stopword(t); });
  return out;
}

std::string strip_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '<') {
      size_t close = text.find('>', i + 1);
      if (close == std::string_view::npos) break;
      out.push_back(' ');
      i = close + 1;
    } else if (c == '&') {
      size_t semi = text.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 8) {
        std::string_view ent = text.substr(i + 1, semi - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos" || ent == "#39") out.push_back('\'');
        else out.push_back(' ');
        i = semi + 1;
      } else {
        out.push_back(c);
        ++i;
      }
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

// ---- when normalization -----------------------------------------------------

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool valid_date(int y, int m, int d) {
  if (y < 1000 || y > 2999) return false;
  if (m < 1 || m > 12) return false;
  if (d == 0) return true;  // day absent
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int dm = days[m - 1] + (m == 2 && leap(y) ? 1 : 0);
  return d >= 1 && d <= dm;
}

int month_from_name(std::string_view t) {
  static const std::array<std::string_view, 12> names = {
      "january", "february", "march", "april", "may", "june",
      "july", "august", "september", "october", "november", "december"};
  if (t.size() < 3) return 0;
  for (int m = 0; m < 12; ++m) {
    if (t == names[m] || t == names[m].substr(0, 3)) return m + 1;
  }
  return 0;
}

bool all_digits(std::string_view t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
}

int to_int(std::string_view t) {
  int v = 0;
  for (char c : t) v = v * 10 + (c - '0');
  return v;
}

std::string pad2(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

std::vector<std::string> time_tokens(int year, int month, int day) {
  std::vector<std::string> out;
  if (!valid_date(year, month == 0 ? 1 : month, day)) return out;
  const std::string y = std::to_string(year);
  out.push_back(y);
  if (month > 0) {
    out.push_back(y + "-" + pad2(month));
    if (day > 0) out.push_back(y + "-" + pad2(month) + "-" + pad2(day));
    out.push_back("month:" + pad2(month));
  }
  return out;
}

std::vector<std::string> normalize_when(std::string_view date_text) {
  std::string s = collapse_ws(to_lower(date_text));
  if (s.empty()) return {};

  // ISO forms: YYYY-MM, YYYY-MM-DD, optionally followed by a time part.
  if (s.size() >= 7 && all_digits(s.substr(0, 4)) && s[4] == '-') {
    int y = to_int(s.substr(0, 4));
    size_t m_end = s.find_first_not_of("0123456789", 5);
    std::string_view mv = std::string_view(s).substr(5, (m_end == std::string::npos ? s.size() : m_end) - 5);
    if (!mv.empty() && mv.size() <= 2) {
      int m = to_int(mv);
      int d = 0;
      if (m_end != std::string::npos && s[m_end] == '-') {
        size_t d_start = m_end + 1;
        size_t d_end = s.find_first_not_of("0123456789", d_start);
        std::string_view dv =
            std::string_view(s).substr(d_start, (d_end == std::string::npos ? s.size() : d_end) - d_start);
        if (dv.empty() || dv.size() > 2) return {};
        // anything after the day must be a time suffix, e.g. "T14:22:01Z" or " 14:22"
        if (d_end != std::string::npos && s[d_end] != 't' && s[d_end] != ' ') return {};
        d = to_int(dv);
      } else if (m_end != std::string::npos && s[m_end] != ' ' && s[m_end] != 't') {
        return {};
      }
      if (valid_date(y, m, d)) return time_tokens(y, m, d);
      return {};
    }
  }

  // US slash form M/D/YYYY.
  {
    std::vector<std::string> parts = tokenize(s);
    if (std::count(s.begin(), s.end(), '/') == 2 && parts.size() >= 3 && all_digits(parts[0]) &&
        all_digits(parts[1]) && all_digits(parts[2]) && parts[2].size() == 4) {
      int m = to_int(parts[0]), d = to_int(parts[1]), y = to_int(parts[2]);
      if (valid_date(y, m, d)) return time_tokens(y, m, d);
      return {};
    }
  }

  // Free-form with a month name and/or 4-digit year: covers RFC-2822 dates
  // ("mon, 14 may 2001 16:39:00 -0700"), "june 2016", "may 14, 2001".
  std::vector<std::string> toks = tokenize(s);
  int year = 0, month = 0, day = 0;
  for (const std::string& t : toks) {
    if (!month && month_from_name(t)) {
      month = month_from_name(t);
      continue;
    }
    if (all_digits(t)) {
      if (t.size() == 4 && !year && to_int(t) >= 1000) {
        year = to_int(t);
        continue;
      }
      if (t.size() <= 2 && !day && to_int(t) >= 1 && to_int(t) <= 31) {
        day = to_int(t);
        continue;
      }
    }
    // Ignore weekday names, timezone and time-of-day tokens; they follow the
    // year in RFC-2822 so the fields above are already claimed.
  }
  if (year && valid_date(year, month == 0 ? 1 : month, month == 0 ? 0 : day)) {
    if (month == 0) return time_tokens(year, 0, 0);  // bare year
    return time_tokens(year, month, day);
  }
  return {};
}

std::optional<TimeGranularity> time_token_granularity(std::string_view token) {
  auto digits = [](std::string_view v) { return all_digits(v); };
  if (token.size() == 4 && digits(token)) return TimeGranularity::Year;
  if (token.size() == 7 && digits(token.substr(0, 4)) && token[4] == '-' && digits(token.substr(5)))
    return TimeGranularity::YearMonth;
  if (token.size() == 10 && digits(token.substr(0, 4)) && token[4] == '-' && digits(token.substr(5, 2)) &&
      token[7] == '-' && digits(token.substr(8)))
    return TimeGranularity::Day;
  if (token.size() == 8 && token.substr(0, 6) == "month:" && digits(token.substr(6)))
    return TimeGranularity::MonthOfYear;
  return std::nullopt;
}

// ---- entity canonicalization -----------------------------------------------

std::string canonicalize_entity(std::string_view name_or_address, const AliasTable* aliases) {
  std::string s = collapse_ws(to_lower(name_or_address));
  // unwrap "name" <addr> and plain <addr>
  size_t lt = s.find('<');
  if (lt != std::string::npos) {
    size_t gt = s.find('>', lt + 1);
    std::string inside = gt == std::string::npos ? s.substr(lt + 1) : s.substr(lt + 1, gt - lt - 1);
    if (inside.find('@') != std::string::npos) s = collapse_ws(inside);
  }
  size_t at = s.find('@');
  if (at != std::string::npos) {
    std::string local = s.substr(0, at);
    for (char& c : local) {
      if (c == '.' || c == '_' || c == '-') c = ' ';
    }
    s = collapse_ws(local);
  }
  if (aliases) {
    auto it = aliases->find(s);
    if (it != aliases->end()) s = it->second;
  }
  return s;
}

std::vector<std::string> entity_items(std::string_view raw, const AliasTable* aliases) {
  std::vector<std::string> out;
  std::string canonical = canonicalize_entity(raw, aliases);
  if (canonical.empty()) return out;
  out.push_back(canonical);
  std::string s = collapse_ws(to_lower(raw));
  size_t lt = s.find('<');
  if (lt != std::string::npos) {
    size_t gt = s.find('>', lt + 1);
    std::string inside = gt == std::string::npos ? s.substr(lt + 1) : s.substr(lt + 1, gt - lt - 1);
    if (inside.find('@') != std::string::npos) s = collapse_ws(inside);
  }
  if (s.find('@') != std::string::npos && s != canonical) out.push_back(s);
  return out;
}

}  // namespace w5h
