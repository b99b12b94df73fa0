#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "w5h/ingest.hpp"
#include "w5h/synthetic.hpp"

using namespace w5h;
namespace fs = std::filesystem;

namespace {

const char* kMessage =
    "Message-ID: <123.JavaMail@evans>\n"
    "Date: Mon, 14 May 2001 16:39:00 -0700 (PDT)\n"
    "From: a@enron.com\n"
    "To: b@enron.com\n"
    "Subject: lunch meeting\n"
    "\n"
    "Let's sync about the project budget over lunch.\n";

}  // namespace

TEST_CASE("parse_enron_message maps headers onto the six dimensions") {
  TraceObject o = parse_enron_message(kMessage, "evans-m", "inbox");

  CHECK(o.contains(Dim::Who, "a"));
  CHECK(o.contains(Dim::Who, "a@enron.com"));
  CHECK(o.contains(Dim::Who, "b"));
  CHECK(o.items(Dim::When) ==
        ItemList{"2001", "2001-05", "2001-05-14", "month:05"});
  CHECK(o.contains(Dim::What, "lunch"));
  CHECK(o.contains(Dim::What, "meeting"));
  CHECK(o.contains(Dim::What, "budget"));
  CHECK_FALSE(o.contains(Dim::What, "the"));
  CHECK(o.items(Dim::How) == ItemList{"email:evans-m/inbox"});
  CHECK(o.items(Dim::Where).empty());
  CHECK(o.items(Dim::Why).empty());
  CHECK(o.id.rfind("em-", 0) == 0);

  // ids are a stable function of (owner, folder, message id)
  TraceObject o2 = parse_enron_message(kMessage, "evans-m", "inbox");
  CHECK(o.id == o2.id);
  TraceObject other = parse_enron_message(kMessage, "evans-m", "sent");
  CHECK(o.id != other.id);
}

TEST_CASE("parse_enron_message degenerate inputs") {
  // no Date header: object still produced, when empty
  TraceObject o = parse_enron_message("From: a@enron.com\nSubject: hi\n\nbody\n", "x", "f");
  CHECK(o.items(Dim::When).empty());
  CHECK(o.contains(Dim::What, "body"));

  // unparseable date: same rule
  o = parse_enron_message("From: a@enron.com\nDate: whenever\n\nbody\n", "x", "f");
  CHECK(o.items(Dim::When).empty());

  // header block without body separator is malformed
  CHECK_THROWS_AS(parse_enron_message("From: a@enron.com\nSubject: hi\n", "x", "f"),
                  MalformedMessage);
  CHECK_THROWS_AS(parse_enron_message("no colon here\n\nbody", "x", "f"), MalformedMessage);
}

TEST_CASE("rfc822 folded headers and duplicates") {
  RawEmail m = parse_rfc822("To: a@x.com,\n\tb@x.com\nTo: c@x.com\n\nbody");
  REQUIRE(m.headers.size() == 2);
  CHECK(m.headers[0].second == "a@x.com, b@x.com");
  CHECK(m.headers[1].second == "c@x.com");
  CHECK(split_address_list("\"Smith, John\" <j@x.com>, b@x.com").size() == 2);
}

TEST_CASE("parse_trace_record round-trips canonical lines") {
  TraceObject o;
  o.id = "t1";
  o.items(Dim::What) = {"lunch", "budget"};
  o.items(Dim::Who) = {"john smith"};
  o.items(Dim::When) = {"2018", "2018-06", "month:06"};
  o.items(Dim::How) = {"gmail"};
  const std::string line = to_record_line(o);
  TraceObject parsed = parse_trace_record(line);
  CHECK(to_record_line(parsed) == line);
}

TEST_CASE("parse_trace_record normalizes non-canonical values") {
  TraceObject o = parse_trace_record(
      R"({"id":"t2","dims":{"who":["John Smith"],"when":["June 2016"],"what":["Lunch with the team"]}})");
  CHECK(o.items(Dim::Who) == ItemList{"john smith"});
  CHECK(o.items(Dim::When) == ItemList{"2016", "2016-06", "month:06"});
  CHECK(o.items(Dim::What) == ItemList{"lunch", "team"});
}

TEST_CASE("parse_trace_record schema errors") {
  CHECK_THROWS_AS(parse_trace_record("{\"id\":\"x\"}"), SchemaError);
  CHECK_THROWS_AS(parse_trace_record("not json"), SchemaError);
  CHECK_THROWS_AS(parse_trace_record(R"({"id":"x","dims":{"bogus":[]}})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_record(R"({"dims":{"what":[]}})"), SchemaError);
}

TEST_CASE("maildir ingestion is thread-count independent") {
  const fs::path root = fs::temp_directory_path() / "w5h-test-maildir";
  fs::remove_all(root);
  write_synthetic_maildir(root.string(), 41, 60);

  IngestStats stats1, stats4;
  Dataset d1 = ingest_maildir(root.string(), nullptr, &stats1, 1);
  Dataset d4 = ingest_maildir(root.string(), nullptr, &stats4, 4);
  CHECK(stats1.parsed == 60);
  CHECK(stats1.skipped == 0);
  REQUIRE(d1.size() == d4.size());
  for (size_t i = 0; i < d1.size(); ++i) {
    CHECK(to_record_line(d1.at(i)) == to_record_line(d4.at(i)));
  }

  // datasets round-trip through the canonical file
  const fs::path out = root / "dataset.jsonl";
  save_dataset(d1, out.string());
  Dataset reloaded = load_dataset(out.string());
  REQUIRE(reloaded.size() == d1.size());
  for (size_t i = 0; i < d1.size(); ++i) {
    CHECK(to_record_line(reloaded.at(i)) == to_record_line(d1.at(i)));
  }
  fs::remove_all(root);
}

TEST_CASE("alias table loading") {
  const fs::path path = fs::temp_directory_path() / "w5h-aliases.tsv";
  {
    std::ofstream out(path);
    out << "# comment\nJ. Smith\tjohn smith\n";
  }
  AliasTable t = load_alias_table(path.string());
  CHECK(t.at("j. smith") == "john smith");
  CHECK(canonicalize_entity("J. SMITH", &t) == "john smith");
  fs::remove(path);
}
