#pragma once

/// Network graphs, distribution policies for the models N0-N3, the
/// compatible-policy construction, and the constant-knowledge-guarded
/// policy oracle.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cfree/relcore.hpp"

namespace cfree {

struct NodeId {
  int value = 0;

  bool operator==(const NodeId& o) const = default;
  auto operator<=>(const NodeId& o) const = default;
};

inline std::string to_string(NodeId n) { return "n" + std::to_string(n.value); }

/// A connected undirected graph without self-loops. Nodes are 0..n-1.
class NetworkGraph {
 public:
  NetworkGraph(int node_count, std::vector<std::pair<int, int>> edges) {
    if (node_count < 1) throw ValidationError("network needs at least one node");
    for (int i = 0; i < node_count; ++i) nodes_.insert(NodeId{i});
    for (auto [a, b] : edges) {
      if (a == b) throw ValidationError("network graph may not contain self-loops");
      if (a < 0 || a >= node_count || b < 0 || b >= node_count)
        throw ValidationError("edge endpoint out of range");
      edges_.insert({std::min(a, b), std::max(a, b)});
    }
    if (!connected())
      throw ValidationError("network graph must be connected");
  }

  const std::set<NodeId>& nodes() const { return nodes_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  std::vector<NodeId> neighbors(NodeId n) const {
    std::vector<NodeId> out;
    for (auto [a, b] : edges_) {
      if (a == n.value) out.push_back(NodeId{b});
      if (b == n.value) out.push_back(NodeId{a});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::set<std::pair<int, int>>& edges() const { return edges_; }

 private:
  bool connected() const {
    std::set<int> seen{0};
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
      int v = frontier.back();
      frontier.pop_back();
      for (auto [a, b] : edges_) {
        int w = a == v ? b : (b == v ? a : -1);
        if (w >= 0 && seen.insert(w).second) frontier.push_back(w);
      }
    }
    return static_cast<int>(seen.size()) == node_count();
  }

  std::set<NodeId> nodes_;
  std::set<std::pair<int, int>> edges_;
};

inline NetworkGraph line_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return NetworkGraph(n, edges);
}

inline NetworkGraph star_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return NetworkGraph(n, edges);
}

inline NetworkGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return NetworkGraph(n, edges);
}

enum class ModelTag { N0, N1, N2, N3 };

inline const char* to_string(ModelTag m) {
  switch (m) {
    case ModelTag::N0: return "N0";
    case ModelTag::N1: return "N1";
    case ModelTag::N2: return "N2";
    case ModelTag::N3: return "N3";
  }
  return "?";
}

inline std::optional<ModelTag> parse_model_tag(std::string_view s) {
  if (s == "N0") return ModelTag::N0;
  if (s == "N1") return ModelTag::N1;
  if (s == "N2") return ModelTag::N2;
  if (s == "N3") return ModelTag::N3;
  return std::nullopt;
}

/// Stable, platform-independent 64-bit FNV-1a over a string. Used by the
/// hash policies so placements reproduce across machines.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Assigns each domain constant to a non-empty node set. Unmapped constants
/// fall through to the default rule: either a fixed node set or a stable
/// hash of the constant's name.
struct ConstantAssignment {
  std::map<Constant, std::set<NodeId>> overrides;
  enum class DefaultKind { FixedSet, Hash } default_kind = DefaultKind::FixedSet;
  std::set<NodeId> default_nodes;  // for FixedSet
  int node_count = 1;              // for Hash
  NodeId nullary_home{0};

  std::set<NodeId> operator()(const Constant& c) const {
    auto it = overrides.find(c);
    if (it != overrides.end()) return it->second;
    if (default_kind == DefaultKind::FixedSet) {
      if (default_nodes.empty())
        throw ValidationError("constant assignment default set must be non-empty");
      return default_nodes;
    }
    return {NodeId{static_cast<int>(fnv1a64(c.symbol()) % static_cast<std::uint64_t>(node_count))}};
  }
};

/// A total map from the input schema's Herbrand base to non-empty node sets.
/// Representations are rule-plus-finite-override so the map stays evaluable
/// on the infinite fact space.
class DistributionPolicy {
 public:
  enum class Kind { SingleNode, Hash, Explicit, ConstantMap };

  static DistributionPolicy single_node(NodeId n) {
    DistributionPolicy p;
    p.kind_ = Kind::SingleNode;
    p.home_ = n;
    p.desc_ = "single_node(" + to_string(n) + ")";
    return p;
  }

  /// One node per fact: FNV-1a of the fact's canonical text, mod node count.
  static DistributionPolicy hash(int node_count) {
    if (node_count < 1) throw ValidationError("hash policy needs a positive node count");
    DistributionPolicy p;
    p.kind_ = Kind::Hash;
    p.node_count_ = node_count;
    p.desc_ = "hash(" + std::to_string(node_count) + ")";
    return p;
  }

  static DistributionPolicy explicit_map(std::set<NodeId> default_nodes,
                                         std::map<Fact, std::set<NodeId>> overrides) {
    if (default_nodes.empty())
      throw ValidationError("explicit policy default node set must be non-empty");
    for (const auto& [f, nodes] : overrides)
      if (nodes.empty())
        throw ValidationError("explicit policy maps " + print_fact(f) + " to no node");
    DistributionPolicy p;
    p.kind_ = Kind::Explicit;
    p.default_nodes_ = std::move(default_nodes);
    p.overrides_ = std::move(overrides);
    p.desc_ = "explicit(" + std::to_string(p.overrides_.size()) + " overrides)";
    return p;
  }

  static DistributionPolicy constant_map(ConstantAssignment f, std::string desc = "") {
    DistributionPolicy p;
    p.kind_ = Kind::ConstantMap;
    p.assignment_ = std::move(f);
    p.desc_ = desc.empty() ? "constant_map" : std::move(desc);
    return p;
  }

  Kind kind() const { return kind_; }
  const std::string& describe() const { return desc_; }
  const std::optional<ConstantAssignment>& assignment() const { return assignment_; }

  /// The non-empty node set a fact is placed on.
  std::set<NodeId> node_set(const Fact& f) const {
    switch (kind_) {
      case Kind::SingleNode:
        return {home_};
      case Kind::Hash:
        return {NodeId{
            static_cast<int>(fnv1a64(print_fact(f)) % static_cast<std::uint64_t>(node_count_))}};
      case Kind::Explicit: {
        auto it = overrides_.find(f);
        return it != overrides_.end() ? it->second : default_nodes_;
      }
      case Kind::ConstantMap: {
        const auto& F = *assignment_;
        if (f.args.empty()) return {F.nullary_home};
        std::set<NodeId> out;
        for (const auto& c : f.args) {
          auto nodes = F(c);
          out.insert(nodes.begin(), nodes.end());
        }
        return out;
      }
    }
    throw Error("unreachable policy kind");
  }

 private:
  Kind kind_ = Kind::SingleNode;
  NodeId home_{0};
  int node_count_ = 1;
  std::set<NodeId> default_nodes_;
  std::map<Fact, std::set<NodeId>> overrides_;
  std::optional<ConstantAssignment> assignment_;
  std::string desc_;
};

inline const char* to_string(DistributionPolicy::Kind k) {
  switch (k) {
    case DistributionPolicy::Kind::SingleNode: return "single_node";
    case DistributionPolicy::Kind::Hash: return "hash";
    case DistributionPolicy::Kind::Explicit: return "explicit";
    case DistributionPolicy::Kind::ConstantMap: return "constant_map";
  }
  return "?";
}

/// The N2 construction: non-nullary facts go to the union of F over their
/// constants; nullary facts go to the fixed nullary home.
inline DistributionPolicy compatible_policy(const ConstantAssignment& F, const Schema& schema) {
  (void)schema;  // the placement rule is uniform over the schema
  return DistributionPolicy::constant_map(F);
}

/// Places each fact of I on every node the policy names for it. The union of
/// the locals reconstructs I; |P(f)| > 1 replicates f.
inline std::map<NodeId, Instance> distribute(const Instance& I, const DistributionPolicy& P,
                                             const NetworkGraph& net) {
  std::map<NodeId, Instance> out;
  for (const auto& n : net.nodes()) out[n];
  for (const auto& f : I) {
    auto nodes = P.node_set(f);
    if (nodes.empty()) throw ValidationError("policy maps " + print_fact(f) + " to no node");
    for (const auto& n : nodes) {
      if (!net.nodes().count(n))
        throw ValidationError("policy places " + print_fact(f) + " on " + to_string(n) +
                              ", which is outside the network");
      out[n].insert(f);
    }
  }
  return out;
}

/// Produces the candidate policies for a given network; run harnesses sample
/// over these.
using PolicyGenerator = std::function<std::vector<DistributionPolicy>(const NetworkGraph&)>;

/// A protocol asked the oracle about a fact whose constants it has not all
/// learned yet. This is a protocol bug, never silently answered.
struct ConstructibilityError : Error {
  using Error::Error;
};

/// "Is `asker` in P(f)?", guarded by constant knowledge: every constant of f
/// must already be known to the asker. Nullary facts are always
/// constructible.
inline bool oracle_query(const DistributionPolicy& P, NodeId asker, const Fact& f,
                         const std::set<Constant>& known) {
  for (const auto& c : f.args)
    if (!known.count(c))
      throw ConstructibilityError("node " + to_string(asker) + " queried the policy about " +
                                  print_fact(f) + " without knowing constant " + c.symbol());
  return P.node_set(f).count(asker) > 0;
}

/// Under a constant-map policy, `R0(a,...,a)` is placed exactly on F(a) for
/// any non-nullary R0, so self-querying it decides constant ownership. Uses
/// the lexicographically first non-nullary relation of the schema.
inline std::optional<Fact> owner_probe_fact(const Schema& schema, const Constant& a) {
  for (const auto& r : schema.relations()) {
    if (r.arity >= 1)
      return Fact(r, std::vector<Constant>(static_cast<size_t>(r.arity), a));
  }
  return std::nullopt;
}

/// The two-scenario policy that keeps every fact except `f` on n0.
inline DistributionPolicy two_node_exception_policy(const Instance& I, const Fact& f, NodeId n0,
                                                    NodeId n1) {
  (void)I;  // the construction depends only on f
  if (n0 == n1) throw ValidationError("the two scenario nodes must differ");
  return DistributionPolicy::explicit_map({n0}, {{f, {n1}}});
}

/// The compatible two-scenario assignment: adom(I) -> {n0}, adom({f}) ->
/// {n1}; requires the added fact to be non-nullary and constant-disjoint
/// from I.
inline ConstantAssignment two_node_exception_assignment(const Instance& I, const Fact& f,
                                                        NodeId n0, NodeId n1) {
  if (n0 == n1) throw ValidationError("the two scenario nodes must differ");
  if (f.args.empty())
    throw ValidationError("the added fact must be non-nullary for a compatible placement");
  auto base_dom = adom(I);
  ConstantAssignment F;
  for (const auto& c : base_dom) F.overrides[c] = {n0};
  for (const auto& c : f.args) {
    if (base_dom.count(c))
      throw ValidationError("constant " + c.symbol() + " occurs in both the base instance and " +
                            print_fact(f) + "; the active domains must be disjoint");
    F.overrides[c] = {n1};
  }
  F.default_kind = ConstantAssignment::DefaultKind::FixedSet;
  F.default_nodes = {n0};
  F.nullary_home = n0;
  return F;
}

}  // namespace cfree
