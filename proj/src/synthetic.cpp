#include "w5h/synthetic.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <random>

#include "w5h/textnorm.hpp"

namespace fs = std::filesystem;

namespace w5h {

void SyntheticProfile::validate(size_t n_objects) const {
  if (n_objects < 1) throw InvalidProfile("n_objects must be >= 1");
  if (people < 2) throw InvalidProfile("need at least 2 people");
  if (clique_size < 2) throw InvalidProfile("clique_size must be >= 2");
  if (topics < 1 || words_per_topic < 4) throw InvalidProfile("topics must be >= 1 with >= 4 words each");
  if (sources.empty()) throw InvalidProfile("no sources");
  double sum = 0;
  for (const auto& [name, p] : sources) {
    if (name.empty()) throw InvalidProfile("empty source tag");
    if (p < 0) throw InvalidProfile("negative proportion for source " + name);
    sum += p;
  }
  if (sum <= 0) throw InvalidProfile("source proportions are not normalizable");
  if (year_min < 1000 || year_max > 2999 || year_min > year_max) throw InvalidProfile("bad year range");
  if (subject_words_min < 1 || subject_words_max < subject_words_min) throw InvalidProfile("bad subject length range");
  if (body_words_min < 1 || body_words_max < body_words_min) throw InvalidProfile("bad body length range");
  for (const PinSpec& pin : pins) {
    if (pin.item.empty()) throw InvalidProfile("pin with empty item");
    if (pin.start + pin.count > n_objects) throw InvalidProfile("pin range exceeds n_objects");
    if (pin.dim == Dim::Why) throw InvalidProfile("cannot pin the why dimension");
  }
}

namespace {

const std::array<std::string_view, 24> kFirst = {
    "alice", "bruno", "carla", "derek", "elena", "felix", "grace", "henry",
    "irene", "jonas", "karen", "lucas", "maria", "nadia", "oscar", "paula",
    "quinn", "ramon", "sofia", "tomas", "ursula", "victor", "wanda", "xenia"};
const std::array<std::string_view, 24> kLast = {
    "arroyo", "becker", "castillo", "donovan", "eriksen", "ferraro", "galvan", "hoffman",
    "ibarra", "jansen", "keller", "lombardi", "moreau", "novak", "ortega", "petrov",
    "quiroga", "ramsey", "santana", "tanaka", "ulrich", "vasquez", "wheeler", "yamada"};
const std::array<std::string_view, 10> kCities = {
    "riverton", "maplewood", "ashford", "brookdale", "cedar falls",
    "dunmore", "eastvale", "fairhaven", "glenrock", "harborview"};
const std::array<std::string_view, 20> kSyllables = {
    "ba", "do", "ki", "ra", "mu", "ta", "le", "so", "ne", "vi",
    "po", "zu", "ga", "fe", "lo", "shi", "wa", "ren", "ju", "ca"};

struct World {
  std::vector<std::string> display;  // "alice arroyo"
  std::vector<std::string> address;  // "alice.arroyo@example.com"
  std::vector<std::vector<std::string>> topic_words;
  std::vector<std::string> common_words;
  std::vector<std::string> source_tags;
  std::vector<double> source_cdf;
  int n_cliques = 0;
  int clique_size = 0;

  int clique_of(int person) const { return person / clique_size; }
  int clique_year(const SyntheticProfile& p, int clique) const {
    return p.year_min + clique % (p.year_max - p.year_min + 1);
  }
};

std::string make_word(int serial) {
  // Enumerates 3-syllable combinations; distinct serials give distinct words.
  const int n = static_cast<int>(kSyllables.size());
  std::string w;
  w += kSyllables[serial % n];
  w += kSyllables[(serial / n) % n];
  w += kSyllables[(serial / (n * n)) % n];
  return w;
}

World build_world(const SyntheticProfile& p) {
  World w;
  w.clique_size = p.clique_size;
  w.n_cliques = (p.people + p.clique_size - 1) / p.clique_size;
  for (int i = 0; i < p.people; ++i) {
    std::string first(kFirst[i % kFirst.size()]);
    std::string last(kLast[(i / kFirst.size() + i) % kLast.size()]);
    w.display.push_back(first + " " + last);
    w.address.push_back(first + "." + last + "@example.com");
  }
  int serial = 0;
  for (int t = 0; t < p.topics; ++t) {
    std::vector<std::string> block;
    for (int j = 0; j < p.words_per_topic; ++j) block.push_back(make_word(serial++));
    w.topic_words.push_back(std::move(block));
  }
  for (int j = 0; j < p.common_words; ++j) w.common_words.push_back(make_word(serial++));
  double sum = 0;
  for (const auto& [name, prob] : p.sources) sum += prob;
  double acc = 0;
  for (const auto& [name, prob] : p.sources) {
    acc += prob / sum;
    w.source_tags.push_back(name);
    w.source_cdf.push_back(acc);
  }
  return w;
}

struct Draft {
  int sender = 0;
  std::vector<int> recipients;
  int topic = 0;
  int year = 0, month = 0, day = 0;
  std::string source;
  std::vector<std::string> subject;
  std::vector<std::string> body;
  std::string city;  // empty unless the object has a location
};

Draft draw_draft(const World& w, const SyntheticProfile& p, std::mt19937_64& rng) {
  Draft d;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int clique = static_cast<int>(rng() % w.n_cliques);
  const int base = clique * w.clique_size;
  const int members = std::min<int>(w.clique_size, static_cast<int>(w.display.size()) - base);
  d.sender = base + static_cast<int>(rng() % members);
  const int n_rcpt = 1 + static_cast<int>(rng() % std::min(3, std::max(1, members - 1)));
  for (int r = 0; r < n_rcpt; ++r) {
    int cand = base + static_cast<int>(rng() % members);
    if (cand != d.sender && std::find(d.recipients.begin(), d.recipients.end(), cand) == d.recipients.end()) {
      d.recipients.push_back(cand);
    }
  }
  if (d.recipients.empty()) d.recipients.push_back(base + (d.sender - base + 1) % members);

  d.topic = (unit(rng) < p.topic_affinity) ? clique % p.topics : static_cast<int>(rng() % p.topics);
  d.year = w.clique_year(p, clique);
  d.month = 1 + static_cast<int>(rng() % 12);
  d.day = 1 + static_cast<int>(rng() % 28);

  double u = unit(rng);
  d.source = w.source_tags.back();
  for (size_t s = 0; s < w.source_cdf.size(); ++s) {
    if (u <= w.source_cdf[s]) {
      d.source = w.source_tags[s];
      break;
    }
  }

  const auto& block = w.topic_words[d.topic];
  const int n_subject = p.subject_words_min + static_cast<int>(rng() % (p.subject_words_max - p.subject_words_min + 1));
  for (int j = 0; j < n_subject; ++j) d.subject.push_back(block[rng() % block.size()]);
  const int n_body = p.body_words_min + static_cast<int>(rng() % (p.body_words_max - p.body_words_min + 1));
  for (int j = 0; j < n_body; ++j) {
    if (!w.common_words.empty() && unit(rng) < p.common_word_rate) {
      d.body.push_back(w.common_words[rng() % w.common_words.size()]);
    } else {
      d.body.push_back(block[rng() % block.size()]);
    }
  }
  if (unit(rng) < p.where_rate) d.city = std::string(kCities[rng() % kCities.size()]);
  return d;
}

std::string object_id(size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "syn-%06zu", i);
  return buf;
}

}  // namespace

Dataset generate_synthetic_dataset(uint64_t seed, size_t n_objects, const SyntheticProfile& profile) {
  profile.validate(n_objects);
  const World w = build_world(profile);

  std::vector<TraceObject> objects(n_objects);
  for (size_t i = 0; i < n_objects; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    Draft dr = draw_draft(w, profile, rng);
    TraceObject& o = objects[i];
    o.id = object_id(i);
    o.items(Dim::Who).push_back(w.display[dr.sender]);
    for (int r : dr.recipients) o.items(Dim::Who).push_back(w.display[r]);
    o.items(Dim::When) = time_tokens(dr.year, dr.month, dr.day);
    std::string text;
    for (const auto& t : dr.subject) text += t + " ";
    for (const auto& t : dr.body) text += t + " ";
    o.items(Dim::What) = what_terms(text);
    o.items(Dim::How).push_back(dr.source);
    if (!dr.city.empty()) o.items(Dim::Where).push_back(std::string(dr.city));
  }

  for (const PinSpec& pin : profile.pins) {
    for (size_t i = pin.start; i < pin.start + pin.count; ++i) {
      ItemList& items = objects[i].items(pin.dim);
      if (pin.replace) items.clear();
      items.push_back(pin.item);
    }
  }

  Dataset d;
  for (TraceObject& o : objects) d.add(std::move(o));
  d.freeze();
  return d;
}

void write_synthetic_maildir(const std::string& root, uint64_t seed, size_t n_messages,
                             const SyntheticProfile& profile) {
  profile.validate(n_messages);
  const World w = build_world(profile);
  static const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

  fs::create_directories(root);
  for (size_t i = 0; i < n_messages; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    Draft dr = draw_draft(w, profile, rng);

    // The mailbox copy lives with the sender ("sent") or a recipient ("inbox").
    const bool in_sent = rng() % 2 == 0;
    const int owner = in_sent ? dr.sender : dr.recipients[rng() % dr.recipients.size()];
    std::string owner_name = w.address[owner].substr(0, w.address[owner].find('@'));
    const std::string folder = in_sent ? "sent" : "inbox";

    char date[64];
    std::snprintf(date, sizeof date, "%d %s %d %02d:%02d:00 -0700", dr.day, kMonths[dr.month - 1],
                  dr.year, static_cast<int>(rng() % 24), static_cast<int>(rng() % 60));

    std::string msg;
    msg += "Message-ID: <syn-" + std::to_string(i) + "@example.com>\n";
    msg += "Date: " + std::string(date) + "\n";
    msg += "From: " + w.address[dr.sender] + "\n";
    msg += "To: ";
    for (size_t r = 0; r < dr.recipients.size(); ++r) {
      if (r) msg += ", ";
      msg += w.address[dr.recipients[r]];
    }
    msg += "\nSubject: ";
    for (size_t j = 0; j < dr.subject.size(); ++j) {
      if (j) msg += " ";
      msg += dr.subject[j];
    }
    msg += "\n\n";
    int col = 0;
    for (size_t j = 0; j < dr.body.size(); ++j) {
      msg += dr.body[j];
      col += static_cast<int>(dr.body[j].size()) + 1;
      if (col > 60) {
        msg += "\n";
        col = 0;
      } else {
        msg += " ";
      }
    }
    msg += "\n";

    fs::path dir = fs::path(root) / owner_name / folder;
    fs::create_directories(dir);
    char fname[32];
    std::snprintf(fname, sizeof fname, "m%06zu.txt", i);
    std::ofstream out(dir / fname, std::ios::binary);
    out << msg;
  }
}

}  // namespace w5h
