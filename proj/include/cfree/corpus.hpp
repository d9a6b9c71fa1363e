#pragma once

/// The bundled query corpus: four built-in queries (transitive closure, the
/// asymmetric-edge query, the path-of-length-one-but-not-two query, and the
/// win-move game), a set of semi-positive programs for the complement
/// identity suite, standard inputs, network suites, and policy generators.

#include <map>
#include <string>
#include <vector>

#include "cfree/datalog.hpp"
#include "cfree/netmodel.hpp"
#include "cfree/relcore.hpp"

namespace cfree::corpus {

inline constexpr const char* kTcText = R"(% transitive closure of an edge relation
t(X,Y) :- e(X,Y).
t(X,Z) :- t(X,Y), e(Y,Z).
@output t.
)";

inline constexpr const char* kAsymText = R"(% edges whose reverse is absent
asym(X,Y) :- e(X,Y), not e(Y,X).
@output asym.
)";

inline constexpr const char* kRemark33Text = R"(% is there a path of length one but none of length two?
p1() :- e(X,Y).
p2() :- e(X,Y), e(Y,Z).
answer() :- p1(), not p2().
@output answer.
)";

inline constexpr const char* kWinmoveText = R"(% the win-move game; not stratified, evaluation needs the built-in fixpoint
won(X) :- move(X,Y), not won(Y).
@output won.
)";

inline Query tc_query() { return Query::from_program("tc", parse_program(kTcText)); }
inline Query asym_query() { return Query::from_program("asym", parse_program(kAsymText)); }
inline Query remark33_query() {
  return Query::from_program("remark33", parse_program(kRemark33Text));
}
inline Query winmove_query() {
  Schema in({kMoveRel});
  Schema out({kWonRel});
  return Query::opaque("winmove", std::move(in), std::move(out),
                       [](const Instance& I) { return winmove(I); });
}

inline std::vector<std::string> builtin_query_names() {
  return {"tc", "asym", "remark33", "winmove"};
}

inline Query builtin_query(const std::string& name) {
  if (name == "tc") return tc_query();
  if (name == "asym") return asym_query();
  if (name == "remark33") return remark33_query();
  if (name == "winmove") return winmove_query();
  throw ValidationError("unknown built-in query " + name);
}

inline const char* builtin_query_text(const std::string& name) {
  if (name == "tc") return kTcText;
  if (name == "asym") return kAsymText;
  if (name == "remark33") return kRemark33Text;
  if (name == "winmove") return kWinmoveText;
  throw ValidationError("unknown built-in query " + name);
}

/// Semi-positive programs for the complement-identity and bounded
/// monotonicity suites.
inline std::vector<std::pair<std::string, std::string>> semipositive_corpus() {
  return {
      {"asym", kAsymText},
      {"noloop", R"(% edges out of loop-free sources
noloop(X,Y) :- e(X,Y), not e(X,X).
@output noloop.
)"},
      {"unmarked_src", R"(% edge sources that carry no mark
unmarked_src(X) :- e(X,Y), not mark(X).
@output unmarked_src.
)"},
      {"only_e", R"(% edges not shadowed by f
only_e(X,Y) :- e(X,Y), not f(X,Y).
@output only_e.
)"},
      {"reach_good", R"(% reachability avoiding flagged targets
reach_good(X,Y) :- e(X,Y), not bad(Y).
reach_good(X,Z) :- reach_good(X,Y), e(Y,Z), not bad(Z).
@output reach_good.
)"},
      {"flag", R"(% some edge whose target has no self-loop
flag() :- e(X,Y), not e(Y,Y).
@output flag.
)"},
  };
}

// ---------------------------------------------------------------------------
// Standard inputs (at most 8 facts each).

inline std::vector<Instance> standard_inputs(const std::string& query_name) {
  auto parse = [](const char* text) { return parse_facts(text); };
  if (query_name == "winmove") {
    return {
        parse("move(a,b)."),
        parse("move(a,b). move(b,c)."),
        parse("move(a,b). move(c,d)."),
        parse("move(a,b). move(b,a). move(b,c). move(d,d)."),
    };
  }
  // edge-relation queries (tc, asym, remark33)
  return {
      parse(""),
      parse("e(a,b)."),
      parse("e(a,b). e(b,c)."),
      parse("e(a,b). e(b,a)."),
      parse("e(a,b). e(b,a). e(a,c)."),
      parse("e(a,a). e(b,c). e(c,b). e(b,d). e(d,e)."),
  };
}

/// Line, star, and complete graphs over 1..max_nodes nodes, deduplicated by
/// edge set.
inline std::vector<NetworkGraph> network_suite(int max_nodes) {
  std::vector<NetworkGraph> out;
  std::set<std::pair<int, std::set<std::pair<int, int>>>> seen;
  for (int n = 1; n <= max_nodes; ++n) {
    for (const auto& g : {line_graph(n), star_graph(n), complete_graph(n)}) {
      if (seen.insert({n, g.edges()}).second) out.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policy generators.

/// Arbitrary policies (any model that does not require replication): all on
/// node 0, fact-hash, an explicit map with one override, and a constant map.
inline PolicyGenerator arbitrary_policies() {
  return [](const NetworkGraph& net) {
    int n = net.node_count();
    std::vector<DistributionPolicy> out;
    out.push_back(DistributionPolicy::single_node(NodeId{0}));
    out.push_back(DistributionPolicy::hash(n));
    {
      std::map<Fact, std::set<NodeId>> overrides;
      Fact pivot(RelSymbol{"e", 2}, {Constant("a"), Constant("b")});
      overrides[pivot] = {NodeId{0}};
      out.push_back(DistributionPolicy::explicit_map({NodeId{n - 1}}, std::move(overrides)));
    }
    {
      ConstantAssignment F;
      F.default_kind = ConstantAssignment::DefaultKind::Hash;
      F.node_count = n;
      F.nullary_home = NodeId{0};
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(hash)"));
    }
    return out;
  };
}

/// Compatible (constant-replicated) policies: five distinct constant
/// assignments covering no replication, hash spread, full replication, and
/// two explicit splits.
inline PolicyGenerator compatible_policies() {
  return [](const NetworkGraph& net) {
    int n = net.node_count();
    std::vector<DistributionPolicy> out;
    {
      ConstantAssignment F;
      F.default_nodes = {NodeId{0}};
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(all->n0)"));
    }
    {
      ConstantAssignment F;
      F.default_kind = ConstantAssignment::DefaultKind::Hash;
      F.node_count = n;
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(hash)"));
    }
    {
      ConstantAssignment F;
      for (const auto& node : net.nodes()) F.default_nodes.insert(node);
      F.nullary_home = NodeId{0};
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(replicate-all)"));
    }
    {
      ConstantAssignment F;
      const char* firsts = "abc";
      for (const char* c = firsts; *c; ++c)
        F.overrides[Constant(std::string(1, *c))] = {NodeId{0}};
      F.default_nodes = {NodeId{n - 1}};
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(abc->n0,rest->last)"));
    }
    {
      ConstantAssignment F;
      int i = 0;
      for (char c = 'a'; c <= 'e'; ++c, ++i) {
        NodeId first{i % n}, second{(i + 1) % n};
        F.overrides[Constant(std::string(1, c))] = {first, second};
      }
      F.default_nodes = {NodeId{0}};
      out.push_back(DistributionPolicy::constant_map(F, "constant_map(pair-replicated)"));
    }
    return out;
  };
}

}  // namespace cfree::corpus
