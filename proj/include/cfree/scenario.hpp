#pragma once

/// Scenario files: a single JSON document naming the query, the input facts,
/// the network, the model, the policy, the protocol, and the run
/// configuration. Validation rejects model/policy mismatches before a run
/// starts.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfree/corpus.hpp"
#include "cfree/datalog.hpp"
#include "cfree/netmodel.hpp"
#include "cfree/relcore.hpp"
#include "cfree/simulator.hpp"

namespace cfree {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct Scenario {
  Query query;
  Instance input;
  NetworkGraph network;
  ModelTag model;
  DistributionPolicy policy;
  std::string protocol_name;
  RunConfig cfg;
};

namespace detail {

using nlohmann::json;

inline std::set<NodeId> parse_node_list(const json& j) {
  std::set<NodeId> out;
  for (const auto& v : j) out.insert(NodeId{v.get<int>()});
  if (out.empty()) throw ValidationError("scenario: node list must be non-empty");
  return out;
}

}  // namespace detail

/// Policy fragment: {"kind": "single_node"|"hash"|"explicit"|"constant_map"}
/// with a constant_map carrying `F` (constant -> node list), `default`
/// (node list or "hash"), and `nullary_home`.
inline DistributionPolicy parse_policy_json(const nlohmann::json& j, int node_count) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "single_node") {
    return DistributionPolicy::single_node(NodeId{j.value("node", 0)});
  }
  if (kind == "hash") {
    return DistributionPolicy::hash(node_count);
  }
  if (kind == "explicit") {
    std::map<Fact, std::set<NodeId>> overrides;
    if (j.contains("overrides")) {
      for (const auto& o : j.at("overrides")) {
        Instance facts = parse_facts(o.at("fact").get<std::string>());
        if (facts.size() != 1)
          throw ValidationError("scenario: each explicit override names exactly one fact");
        overrides[*facts.begin()] = detail::parse_node_list(o.at("nodes"));
      }
    }
    return DistributionPolicy::explicit_map(detail::parse_node_list(j.at("default")),
                                            std::move(overrides));
  }
  if (kind == "constant_map") {
    ConstantAssignment F;
    if (j.contains("F")) {
      for (const auto& [name, nodes] : j.at("F").items())
        F.overrides[Constant(name)] = detail::parse_node_list(nodes);
    }
    if (j.contains("default") && j.at("default").is_string()) {
      if (j.at("default").get<std::string>() != "hash")
        throw ValidationError("scenario: constant_map default is a node list or \"hash\"");
      F.default_kind = ConstantAssignment::DefaultKind::Hash;
      F.node_count = node_count;
    } else if (j.contains("default")) {
      F.default_nodes = detail::parse_node_list(j.at("default"));
    } else {
      F.default_nodes = {NodeId{0}};
    }
    F.nullary_home = NodeId{j.value("nullary_home", 0)};
    return DistributionPolicy::constant_map(F);
  }
  throw ValidationError("scenario: unknown policy kind " + kind);
}

inline Instance parse_input_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_facts(j.get<std::string>());
  if (j.is_array()) {
    std::string text;
    for (const auto& line : j) text += line.get<std::string>() + "\n";
    return parse_facts(text);
  }
  if (j.is_object() && j.contains("file")) return parse_facts(read_file(j.at("file")));
  throw ValidationError("scenario: input must be a fact string, an array, or {\"file\": ...}");
}

inline Query parse_query_json(const nlohmann::json& j) {
  std::string text;
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
    for (const auto& builtin : corpus::builtin_query_names())
      if (name == builtin) return corpus::builtin_query(name);
    throw ValidationError("scenario: unknown built-in query " + name +
                          " (use program_file/program_text for custom programs)");
  }
  if (j.contains("program_file")) {
    text = read_file(j.at("program_file"));
    name = j.at("program_file").get<std::string>();
  } else if (j.contains("program_text")) {
    text = j.at("program_text").get<std::string>();
    name = j.value("name", "inline");
  } else {
    throw ValidationError("scenario: query must be a built-in name or carry program_file/text");
  }
  Program p = parse_program(text);
  if (classify_program(p) == ProgramClass::NonStratified)
    throw ValidationError("scenario: program " + name +
                          " is not stratified and cannot be evaluated; use a built-in query");
  return Query::from_program(name, std::move(p));
}

inline RunConfig parse_run_json(const nlohmann::json& j, ModelTag model) {
  RunConfig cfg;
  cfg.model = model;
  if (j.is_null()) return cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.fairness_bound = j.value("fairness_bound", cfg.fairness_bound);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.hb_rounds = j.value("rounds", cfg.hb_rounds);
  if (j.contains("mode")) {
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "fair-random")
      cfg.mode = RunMode::FairRandom;
    else if (mode == "heartbeat-only")
      cfg.mode = RunMode::HeartbeatOnly;
    else if (mode == "exhaustive")
      cfg.mode = RunMode::Exhaustive;
    else
      throw ValidationError("scenario: unknown run mode " + mode);
  }
  if (cfg.fairness_bound < 1) throw ValidationError("scenario: fairness_bound must be >= 1");
  if (cfg.max_steps < 1) throw ValidationError("scenario: max_steps must be >= 1");
  return cfg;
}

/// Model/protocol/policy pairing rules: t_repl needs N2 with a constant-map
/// policy; t_adom needs a model granting the policy oracle (N1 and up); any
/// scenario tagged N2 must use a constant-map policy.
inline void validate_scenario(const Scenario& s) {
  if (s.protocol_name == "t_repl") {
    if (s.model != ModelTag::N2)
      throw ValidationError("scenario: t_repl requires model N2");
  }
  if (s.protocol_name == "t_adom") {
    if (s.model == ModelTag::N0)
      throw ValidationError("scenario: t_adom requires the policy oracle (model N1 or above)");
  }
  if (s.model == ModelTag::N2 && s.policy.kind() != DistributionPolicy::Kind::ConstantMap)
    throw ValidationError("scenario: model N2 requires a constant_map policy");
}

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Query q = parse_query_json(j.at("query"));
  Instance input = parse_input_json(j.at("input"));
  if (!instance_over(input, q.input_schema()))
    throw ValidationError("scenario: input facts are not over the query's input schema");

  const auto& nj = j.at("network");
  int nodes = nj.at("nodes").get<int>();
  std::vector<std::pair<int, int>> edges;
  if (nj.contains("edges"))
    for (const auto& e : nj.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  NetworkGraph net(nodes, std::move(edges));

  auto model = parse_model_tag(j.value("model", "N1"));
  if (!model) throw ValidationError("scenario: model must be one of N0, N1, N2, N3");

  DistributionPolicy policy = parse_policy_json(j.at("policy"), net.node_count());
  std::string protocol = j.at("protocol").get<std::string>();
  RunConfig cfg = parse_run_json(j.contains("run") ? j.at("run") : nlohmann::json(), *model);

  Scenario s{std::move(q), std::move(input), std::move(net), *model, std::move(policy),
             std::move(protocol), cfg};
  validate_scenario(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

}  // namespace cfree
