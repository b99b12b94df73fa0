#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "w5h/object.hpp"

namespace w5h {

// Forces a known co-occurrence count onto a block of generated objects, so
// tests can assert exact frequencies. Pin items should use values outside the
// organic pools (the generator never emits plain "john" or "gmail" keys).
struct PinSpec {
  size_t start = 0;
  size_t count = 0;
  Dim dim = Dim::Who;
  std::string item;
  bool replace = true;  // replace the dimension's items; false appends
};

struct SyntheticProfile {
  int people = 40;
  int clique_size = 5;
  int topics = 8;
  int words_per_topic = 60;
  int common_words = 40;
  std::vector<std::pair<std::string, double>> sources = {
      {"gmail", 0.5}, {"facebook", 0.2}, {"dropbox", 0.15}, {"calendar", 0.15}};
  int year_min = 2015;
  int year_max = 2018;
  int subject_words_min = 2;
  int subject_words_max = 4;
  int body_words_min = 12;
  int body_words_max = 50;
  double topic_affinity = 0.75;  // P(object topic == its clique's preferred topic)
  double common_word_rate = 0.15;
  double where_rate = 0.02;
  std::vector<PinSpec> pins;

  void validate(size_t n_objects) const;  // throws InvalidProfile
};

// Deterministic for fixed (seed, n_objects, profile). Object ids are
// "syn-NNNNNN" in generation order, which is also the frozen id order.
Dataset generate_synthetic_dataset(uint64_t seed, size_t n_objects, const SyntheticProfile& profile = {});

// The same generative world rendered as an RFC-822 maildir tree
// (<root>/<owner>/<folder>/<file>), for exercising the email ingestion path.
void write_synthetic_maildir(const std::string& root, uint64_t seed, size_t n_messages,
                             const SyntheticProfile& profile = {});

}  // namespace w5h
