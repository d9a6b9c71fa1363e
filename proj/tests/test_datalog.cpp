#include <doctest.h>

#include <atomic>
#include <set>
#include <string>
#include <thread>

#include "cfree/corpus.hpp"
#include "cfree/datalog.hpp"
#include "oracles.hpp"

using namespace cfree;

namespace {

Instance facts(const char* text) { return parse_facts(text); }

}  // namespace

TEST_CASE("parser: rules, directives, inferred schemas") {
  Program p = parse_program("p1() :- e(X,Y).\n@output p1.");
  CHECK(p.rules.size() == 1);
  CHECK(p.edb.contains(RelSymbol{"e", 2}));
  CHECK(p.idb.contains(RelSymbol{"p1", 0}));
  CHECK(p.outputs.contains(RelSymbol{"p1", 0}));

  // negation on the rule's own head passes range restriction; it fails
  // stratification, not parsing
  Program self_neg = parse_program("a(X) :- b(X), not a(X).");
  CHECK(classify_program(self_neg) == ProgramClass::NonStratified);
}

TEST_CASE("parser: error cases") {
  // unguarded variable under negation
  CHECK_THROWS_AS(parse_program("p(X) :- not e(X,X)."), ValidationError);
  // head variable without a positive binder
  CHECK_THROWS_AS(parse_program("p(X) :- q()."), ValidationError);
  // arity conflict across occurrences
  CHECK_THROWS_AS(parse_program("p(X) :- e(X,X), e(X)."), ParseError);
  // output must name a derived relation
  CHECK_THROWS_AS(parse_program("p(X) :- e(X,X).\n@output e."), ParseError);
  CHECK_THROWS_AS(parse_program("p(X) :- e(X,X"), ParseError);
  try {
    parse_program("p(X) :- e(X,X).\nq(Y) :- r(Y), not s(Z).");
    FAIL("expected a validation error");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("range-restricted") != std::string::npos);
  }
}

TEST_CASE("head on an edb relation is rejected for hand-built programs") {
  Program p = parse_program("t(X,Y) :- e(X,Y).");
  p.edb.add(RelSymbol{"t", 2});  // now t is claimed by both sides
  CHECK_THROWS_AS(validate_program(p), ValidationError);
}

TEST_CASE("classification reports the strongest applicable class") {
  CHECK(classify_program(parse_program(corpus::kTcText)) == ProgramClass::Positive);
  CHECK(classify_program(parse_program(corpus::kAsymText)) == ProgramClass::SemiPositive);
  CHECK(classify_program(parse_program(corpus::kRemark33Text)) == ProgramClass::Stratified);
  CHECK(classify_program(parse_program(corpus::kWinmoveText)) == ProgramClass::NonStratified);

  // negation through a positive cycle is still non-stratified
  CHECK(classify_program(parse_program("a(X) :- b(X), not c(X).\nc(X) :- a(X).")) ==
        ProgramClass::NonStratified);
  // negation between strata is fine
  CHECK(classify_program(parse_program("a(X) :- b(X).\nd(X) :- b(X), not a(X).")) ==
        ProgramClass::Stratified);
}

TEST_CASE("eval golden values") {
  Program tc = parse_program(corpus::kTcText);
  CHECK(eval(tc, facts("e(a,b). e(b,c).")) == facts("t(a,b). t(b,c). t(a,c)."));
  CHECK(eval(tc, Instance{}) == Instance{});

  Program remark33 = parse_program(corpus::kRemark33Text);
  CHECK(eval(remark33, facts("e(a,b).")) == facts("answer()."));
  CHECK(eval(remark33, facts("e(a,b). e(b,c).")) == Instance{});

  Program asym = parse_program(corpus::kAsymText);
  CHECK(eval(asym, facts("e(a,b). e(b,a). e(a,c).")) == facts("asym(a,c)."));

  CHECK_THROWS_AS(eval(parse_program(corpus::kWinmoveText), facts("move(a,b).")),
                  ValidationError);
  CHECK_THROWS_AS(eval(tc, facts("move(a,b).")), ValidationError);
}

TEST_CASE("eval with constants in rule bodies") {
  Program p = parse_program("from_a(X) :- e(a,X).\n@output from_a.");
  CHECK(eval(p, facts("e(a,b). e(b,c).")) == facts("from_a(b)."));
}

TEST_CASE("ground-fact rules seed the fixpoint") {
  Program p = parse_program("base(a). base(b).\nout(X) :- base(X).\n@output out.");
  CHECK(p.edb.empty());
  CHECK(eval(p, Instance{}) == facts("out(a). out(b)."));
  // a head with an unbound variable is rejected even with an empty body
  CHECK_THROWS_AS(parse_program("bad(X)."), ValidationError);
}

TEST_CASE("semi-naive evaluation agrees with the guess-and-check oracle") {
  std::vector<std::string> programs = {corpus::kTcText, corpus::kAsymText, corpus::kRemark33Text};
  for (const auto& [name, text] : corpus::semipositive_corpus()) programs.push_back(text);

  for (const auto& text : programs) {
    Program p = parse_program(text);
    auto en = enumerate_instances(p.edb, 2, 3);
    while (auto I = en.next()) {
      CHECK(eval(p, *I) == oracles::naive_eval(p, *I));
    }
  }
}

TEST_CASE("complement over the active domain") {
  Schema e2({RelSymbol{"e", 2}});
  CHECK(complement(facts("e(a,b)."), e2) == facts("e__c(a,a). e__c(b,a). e__c(b,b)."));
  CHECK(complement(Instance{}, e2) == Instance{});

  Schema q0({RelSymbol{"q", 0}});
  CHECK(complement(facts("q()."), q0) == Instance{});
  CHECK(complement(Instance{}, q0) == facts("q__c()."));
}

TEST_CASE("positivize rewrites negated edb literals") {
  Program p = positivize(parse_program(corpus::kAsymText));
  CHECK(classify_program(p) == ProgramClass::Positive);
  CHECK(p.edb.contains(RelSymbol{"e", 2}));
  CHECK(p.edb.contains(RelSymbol{"e__c", 2}));
  REQUIRE(p.rules.size() == 1);
  CHECK(p.rules[0].body[1].atom.rel.name == "e__c");
  CHECK(!p.rules[0].body[1].negated);

  // positive programs pass through unchanged apart from the schema extension
  Program tc = parse_program(corpus::kTcText);
  Program tc2 = positivize(tc);
  CHECK(tc2.rules == tc.rules);

  // programs negating a derived relation are rejected
  CHECK_THROWS_AS(positivize(parse_program(corpus::kRemark33Text)), ValidationError);
  // the reserved suffix may not already be taken
  CHECK_THROWS_AS(positivize(parse_program("p(X) :- e__c(X,X).")), ValidationError);
}

TEST_CASE("complement identity: P(I) = P'(I + I^c) exhaustively") {
  for (const auto& [name, text] : corpus::semipositive_corpus()) {
    Program p = parse_program(text);
    Program positive = positivize(p);
    auto en = enumerate_instances(p.edb, 2, 3);
    while (auto I = en.next()) {
      Instance extended = *I;
      for (const auto& f : complement(*I, p.edb)) extended.insert(f);
      CHECK(eval(p, *I) == eval(positive, extended));
    }
  }
}

TEST_CASE("positive programs are monotone under single-fact additions") {
  Program tc = parse_program(corpus::kTcText);
  auto en = enumerate_instances(tc.edb, 2, 3);
  while (auto I = en.next()) {
    Instance before = eval(tc, *I);
    for (const auto& f : herbrand_slice(tc.edb, adom_union(adom(*I), {Constant("f1")}))) {
      Instance J = *I;
      J.insert(f);
      Instance after = eval(tc, J);
      for (const auto& w : before) CHECK(after.count(w));
    }
  }
}

TEST_CASE("winmove golden values") {
  CHECK(winmove(facts("move(a,b).")) == facts("won(a)."));
  CHECK(winmove(facts("move(a,b). move(b,c).")) == facts("won(b)."));
  CHECK(winmove(facts("move(c,c).")) == Instance{});  // a self-loop is drawn
  CHECK(winmove(Instance{}) == Instance{});
  CHECK_THROWS_AS(winmove(facts("e(a,b).")), ValidationError);
}

TEST_CASE("winmove agrees with the depth-indexed game oracle") {
  Schema move({kMoveRel});
  auto en = enumerate_instances(move, 3, 4);
  while (auto I = en.next()) {
    CHECK(winmove(*I) == oracles::zermelo_winmove(*I));
  }
}

TEST_CASE("winmove output stays inside the active domain") {
  Schema move({kMoveRel});
  auto en = enumerate_instances(move, 3, 3);
  while (auto I = en.next()) {
    for (const auto& f : winmove(*I)) CHECK(adom(*I).count(f.args[0]));
  }
}

TEST_CASE("winmove distributes over constant-disjoint unions") {
  Schema move({kMoveRel});
  auto en = enumerate_instances(move, 2, 2);
  while (auto I = en.next()) {
    // rename a copy apart and check winmove(I + J) = winmove(I) + winmove(J)
    Instance J;
    for (const auto& f : *I) {
      std::vector<Constant> args;
      for (const auto& c : f.args) args.emplace_back("z_" + c.symbol());
      J.insert(Fact(f.rel, std::move(args)));
    }
    Instance both = *I;
    both.insert(J.begin(), J.end());
    Instance expected = winmove(*I);
    for (const auto& f : winmove(J)) expected.insert(f);
    CHECK(winmove(both) == expected);
  }
}

TEST_CASE("shared programs and instances evaluate safely from several threads") {
  Program tc = parse_program(corpus::kTcText);
  Instance I = facts("e(a,b). e(b,c). e(c,d).");
  Instance expected = eval(tc, I);
  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        // concurrent interning of fresh names exercises the constant pool
        Constant scratch("w" + std::to_string(t) + "_" + std::to_string(i));
        (void)scratch;
        if (eval(tc, I) != expected) ++mismatches;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(mismatches == 0);
}

TEST_CASE("eval_query dispatches to programs and opaque evaluators") {
  auto wm = corpus::winmove_query();
  CHECK(eval_query(wm, facts("move(a,b).")) == facts("won(a)."));
  auto tc = corpus::tc_query();
  CHECK(eval_query(tc, Instance{}) == Instance{});
  auto remark = corpus::remark33_query();
  CHECK(eval_query(remark, facts("e(a,b).")) == facts("answer()."));
  CHECK_THROWS_AS(eval_query(wm, facts("e(a,b).")), ValidationError);
}
