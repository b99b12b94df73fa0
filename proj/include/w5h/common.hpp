#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace w5h {

// ---- error types ------------------------------------------------------

struct SchemaError : std::runtime_error { using std::runtime_error::runtime_error; };
struct MalformedMessage : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvalidProfile : std::runtime_error { using std::runtime_error::runtime_error; };
struct UnknownObject : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyCorpus : std::runtime_error { using std::runtime_error::runtime_error; };
struct ObjectNotInCorpus : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvalidSubset : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoEligibleTarget : std::runtime_error { using std::runtime_error::runtime_error; };
struct ArityMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct TooFewPairs : std::runtime_error { using std::runtime_error::runtime_error; };
struct MissingArtifact : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };

// ---- seeding / hashing --------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-task stream seed. Used so parallel work items draw from
// streams that do not depend on scheduling order.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x51ed2701ULL));
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ---- number formatting ---------------------------------------------------

// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Integer-valued doubles print without a decimal point (feature counts are
// exact integers); everything else round-trips.
inline std::string format_value(double v) {
  if (v == static_cast<double>(static_cast<long long>(v)) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  return format_double(v);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw SchemaError("bad numeric value: " + std::string(s));
  }
  return v;
}

// ---- dense document-id bitset --------------------------------------------

class DocBits {
 public:
  DocBits() = default;
  explicit DocBits(size_t n) : n_(n), w_((n + 63) / 64, 0) {}

  void set(size_t i) { w_[i >> 6] |= 1ULL << (i & 63); }
  bool test(size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1ULL; }
  size_t size() const { return n_; }
  bool empty_universe() const { return n_ == 0; }

  uint64_t count() const {
    uint64_t c = 0;
    for (uint64_t w : w_) c += static_cast<uint64_t>(__builtin_popcountll(w));
    return c;
  }

  void intersect_with(const DocBits& o) {
    for (size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
  }

  // |AND of all sets| without materializing the intersection.
  static uint64_t intersection_count(const std::vector<const DocBits*>& sets) {
    if (sets.empty()) return 0;
    const size_t words = sets[0]->w_.size();
    uint64_t c = 0;
    for (size_t i = 0; i < words; ++i) {
      uint64_t w = sets[0]->w_[i];
      for (size_t s = 1; s < sets.size() && w; ++s) w &= sets[s]->w_[i];
      c += static_cast<uint64_t>(__builtin_popcountll(w));
    }
    return c;
  }

 private:
  size_t n_ = 0;
  std::vector<uint64_t> w_;
};

}  // namespace w5h
