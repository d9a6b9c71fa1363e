#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include "cfree/relcore.hpp"

using namespace cfree;

namespace {

Instance facts(const char* text) { return parse_facts(text); }

}  // namespace

TEST_CASE("adom collects exactly the constants used by facts") {
  CHECK(adom(Instance{}).empty());
  CHECK(adom(facts("e(a,b).")) == std::set<Constant>{Constant("a"), Constant("b")});
  // nullary facts contribute nothing
  CHECK(adom(facts("e(a,b). e(b,c). p().")) ==
        std::set<Constant>{Constant("a"), Constant("b"), Constant("c")});
}

TEST_CASE("adom distributes over union") {
  Schema s({RelSymbol{"e", 2}, RelSymbol{"p", 1}});
  auto en1 = enumerate_instances(s, 2, 2);
  while (auto I = en1.next()) {
    auto en2 = enumerate_instances(s, 2, 2);
    while (auto J = en2.next()) {
      Instance u = *I;
      u.insert(J->begin(), J->end());
      CHECK(adom(u) == adom_union(adom(*I), adom(*J)));
    }
  }
}

TEST_CASE("herbrand_slice enumerates all tuples over the constant set") {
  Schema e2({RelSymbol{"e", 2}});
  CHECK(herbrand_slice(e2, {Constant("a")}) == facts("e(a,a)."));
  CHECK(herbrand_slice(e2, {Constant("a"), Constant("b")}) ==
        facts("e(a,a). e(a,b). e(b,a). e(b,b)."));

  Schema with_nullary({RelSymbol{"e", 2}, RelSymbol{"q", 0}});
  CHECK(herbrand_slice(with_nullary, {Constant("a")}, true) == facts("e(a,a). q()."));
  CHECK(herbrand_slice(with_nullary, {Constant("a")}, false) == facts("e(a,a)."));
}

TEST_CASE("herbrand_slice size is the sum of |C|^arity") {
  Schema s({RelSymbol{"e", 2}, RelSymbol{"p", 1}, RelSymbol{"q", 0}, RelSymbol{"t", 3}});
  for (int n = 0; n <= 3; ++n) {
    std::set<Constant> cs;
    for (auto& c : canonical_constants(n)) cs.insert(c);
    size_t expected = n * n + n + n * n * n;
    CHECK(herbrand_slice(s, cs, false).size() == expected);
    CHECK(herbrand_slice(s, cs, true).size() == expected + 1);
  }
}

TEST_CASE("enumerate_instances yields each instance exactly once, smallest first") {
  Schema e2({RelSymbol{"e", 2}});

  SUBCASE("domain 1, max 1 fact") {
    auto en = enumerate_instances(e2, 1, 1);
    CHECK(*en.next() == Instance{});
    CHECK(*en.next() == facts("e(c1,c1)."));
    CHECK(!en.next());
  }

  SUBCASE("domain 0 yields only the empty instance") {
    auto en = enumerate_instances(e2, 0, 5);
    CHECK(*en.next() == Instance{});
    CHECK(!en.next());
  }

  SUBCASE("domain 2, max 4 facts: 16 distinct instances") {
    auto en = enumerate_instances(e2, 2, 4);
    std::set<std::string> seen;
    size_t previous_size = 0;
    while (auto I = en.next()) {
      CHECK(I->size() >= previous_size);  // smallest first
      previous_size = I->size();
      CHECK(seen.insert(print_instance(*I)).second);
      for (const auto& c : adom(*I))
        CHECK((c == Constant("c1") || c == Constant("c2")));
    }
    CHECK(seen.size() == 16);
  }
}

TEST_CASE("fresh_constants avoids the given set and repeats deterministically") {
  auto one = fresh_constants({Constant("a"), Constant("b")}, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Constant("f1"));

  auto two = fresh_constants({}, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] != two[1]);

  auto avoided = fresh_constants({Constant("f1")}, 1);
  REQUIRE(avoided.size() == 1);
  CHECK(avoided[0] == Constant("f2"));

  Schema s({RelSymbol{"e", 2}});
  auto en = enumerate_instances(s, 2, 2);
  while (auto I = en.next()) {
    for (const auto& c : fresh_constants(adom(*I), 3)) CHECK(!adom(*I).count(c));
  }
}

TEST_CASE("fact text parses and prints round-trip") {
  const char* canonical = "e(a,b).\ne(b,c).\np().\n";
  Instance I = parse_facts(canonical);
  CHECK(print_instance(I) == canonical);
  CHECK(parse_facts(print_instance(I)) == I);

  // whitespace and comments are insignificant
  CHECK(parse_facts(" e( a , b ).  % trailing comment\n% whole line\n\te(b,c).\np().") == I);
}

TEST_CASE("round-trip across the enumerated space") {
  Schema s({RelSymbol{"edge", 2}, RelSymbol{"flag", 0}});
  auto en = enumerate_instances(s, 2, 3);
  while (auto I = en.next()) {
    CHECK(parse_facts(print_instance(*I)) == *I);
  }
}

TEST_CASE("fact text errors carry positions") {
  CHECK_THROWS_AS(parse_facts("e(a,b)"), ParseError);       // missing period
  CHECK_THROWS_AS(parse_facts("E(a,b)."), ParseError);      // uppercase relation
  CHECK_THROWS_AS(parse_facts("e(A,b)."), ParseError);      // uppercase argument
  CHECK_THROWS_AS(parse_facts("e(a,b). e(a)."), ParseError);  // arity conflict

  try {
    parse_facts("e(a,b).\ne(a,b,c.");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.line == 2);
  }
}

TEST_CASE("the fact parser survives arbitrary input") {
  std::mt19937_64 gen(2024);
  const std::string alphabet = "abXY(),.%_ \n\t123";
  for (int i = 0; i < 500; ++i) {
    std::string text;
    size_t len = gen() % 40;
    for (size_t j = 0; j < len; ++j) text += alphabet[gen() % alphabet.size()];
    try {
      Instance I = parse_facts(text);
      CHECK(parse_facts(print_instance(I)) == I);  // anything accepted round-trips
    } catch (const ParseError&) {
      // rejection with a position is the other acceptable outcome
    }
  }
}

TEST_CASE("fact construction checks arity") {
  CHECK_THROWS_AS(Fact(RelSymbol{"e", 2}, {Constant("a")}), ValidationError);
}

TEST_CASE("schema rejects one name at two arities") {
  Schema s;
  s.add(RelSymbol{"e", 2});
  CHECK_THROWS_AS(s.add(RelSymbol{"e", 3}), ValidationError);
}
