#include <doctest.h>

#include <random>

#include "w5h/object.hpp"
#include "w5h/textnorm.hpp"

using namespace w5h;

namespace {

// A gmail-message-like object: lunch plans from john smith in 2018.
TraceObject fig1_object() {
  TraceObject o;
  o.id = "o1";
  o.items(Dim::What) = {"lunch", "tomorrow", "noon"};
  o.items(Dim::Who) = {"john smith", "jane roe"};
  o.items(Dim::When) = time_tokens(2018, 6, 12);
  o.items(Dim::How) = {"gmail"};
  return o;
}

}  // namespace

TEST_CASE("matches: one shared dimension item suffices") {
  TraceObject o = fig1_object();

  QueryObject q;
  q.items(Dim::When) = {"2018"};
  q.items(Dim::Who) = {"john smith"};
  q.items(Dim::What) = {"lunch"};
  CHECK(matches(q, o));

  QueryObject alice;
  alice.items(Dim::Who) = {"alice"};
  TraceObject bob;
  bob.id = "o2";
  bob.items(Dim::Who) = {"bob"};
  CHECK_FALSE(matches(alice, bob));

  QueryObject partial;
  partial.items(Dim::Who) = {"alice"};
  partial.items(Dim::When) = {"1999"};
  TraceObject when_only;
  when_only.id = "o3";
  when_only.items(Dim::Who) = {"bob"};
  when_only.items(Dim::When) = {"1999", "1999-07"};
  CHECK(matches(partial, when_only));
}

TEST_CASE("matches: partial date granularity falls out of stored tokens") {
  TraceObject o = fig1_object();
  QueryObject q;
  q.items(Dim::When) = {"month:06"};
  CHECK(matches(q, o));
  q.items(Dim::When) = {"2018-06-12"};
  CHECK(matches(q, o));
  q.items(Dim::When) = {"2018-07"};
  CHECK_FALSE(matches(q, o));
}

TEST_CASE("matches is monotone under query growth") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  for (int iter = 0; iter < 200; ++iter) {
    TraceObject o;
    o.id = "o";
    for (Dim d : kFeatureDims) {
      for (const auto& item : pool) {
        if (rng() % 3 == 0) o.items(d).push_back(item);
      }
    }
    QueryObject q;
    bool prev = false;
    for (int step = 0; step < 8; ++step) {
      Dim d = kFeatureDims[rng() % kFeatureDims.size()];
      q.items(d).push_back(pool[rng() % pool.size()]);
      bool now = matches(q, o);
      if (prev) CHECK(now);  // adding items never turns true into false
      prev = prev || now;
    }
  }
}

TEST_CASE("dataset enforces unique ids and freezes in id order") {
  Dataset d;
  TraceObject a;
  a.id = "b-second";
  TraceObject b;
  b.id = "a-first";
  d.add(a);
  d.add(b);
  TraceObject dup;
  dup.id = "a-first";
  CHECK_THROWS_AS(d.add(dup), SchemaError);
  d.freeze();
  CHECK(d.size() == 2);
  CHECK(d.at(0).id == "a-first");
  CHECK(d.at(1).id == "b-second");
  CHECK(d.ordinal_of("b-second") == 1u);
  CHECK_FALSE(d.ordinal_of("nope").has_value());

  TraceObject late;
  late.id = "z";
  CHECK_THROWS_AS(d.add(late), SchemaError);
}

TEST_CASE("record serialization has a stable field order") {
  TraceObject o = fig1_object();
  const std::string line = to_record_line(o);
  CHECK(line ==
        R"({"id":"o1","dims":{"what":["lunch","tomorrow","noon"],"who":["john smith","jane roe"],)"
        R"("when":["2018","2018-06","2018-06-12","month:06"],"where":[],"how":["gmail"]}})");
}
