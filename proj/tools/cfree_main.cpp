// Command-line front end: classify programs against the monotonicity
// hierarchy, evaluate programs on fact files, run simulated network
// scenarios, and drive the verification experiments.
//
// Exit codes: 0 on success, 1 when a property violation was found (pass
// --expect-refuted to flip this for refutation experiments), 2 on usage,
// parse, or validation errors.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cfree/corpus.hpp"
#include "cfree/datalog.hpp"
#include "cfree/monocheck.hpp"
#include "cfree/netmodel.hpp"
#include "cfree/relcore.hpp"
#include "cfree/scenario.hpp"
#include "cfree/simulator.hpp"
#include "cfree/transducer.hpp"

namespace {

using namespace cfree;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<long> max_steps;
  std::optional<int> fairness_bound;
  std::string trace_out;
  bool expect_refuted = false;
};

int finish(const GlobalFlags& flags, bool violation_found) {
  if (flags.expect_refuted) return violation_found ? 0 : 1;
  return violation_found ? 1 : 0;
}

bool is_builtin(const std::string& name) {
  for (const auto& b : corpus::builtin_query_names())
    if (b == name) return true;
  return false;
}

// A builtin name resolves to the bundled query; anything else is a program
// file. File-backed programs must be stratified to be evaluable.
Query resolve_query(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return corpus::builtin_query(name_or_path);
  Program p = parse_program(read_file(name_or_path));
  if (classify_program(p) == ProgramClass::NonStratified)
    throw ValidationError(name_or_path +
                          " is not stratified; only the built-in winmove query covers " +
                          "non-stratified evaluation");
  return Query::from_program(name_or_path, std::move(p));
}

void write_trace(const GlobalFlags& flags, const RunResult& r) {
  if (flags.trace_out.empty()) return;
  std::ofstream out(flags.trace_out, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + flags.trace_out);
  out << render_trace(r);
  std::cout << "trace: " << flags.trace_out << "\n";
}

int cmd_classify(const GlobalFlags& flags, const std::string& program_arg, const Bounds& bounds) {
  std::cout << "command: classify " << program_arg << " bounds=" << to_string(bounds) << "\n";
  bool violation = false;
  if (is_builtin(program_arg)) {
    if (program_arg == "winmove") {
      std::cout << "program-class: non-stratified (built-in fixpoint evaluator)\n";
    } else {
      std::cout << "program-class: "
                << to_string(classify_program(parse_program(corpus::builtin_query_text(program_arg))))
                << "\n";
    }
  } else {
    Program p = parse_program(read_file(program_arg));
    auto cls = classify_program(p);
    std::cout << "program-class: " << to_string(cls) << "\n";
    if (cls == ProgramClass::NonStratified) {
      std::cout << "note: not evaluable; the class checkers were skipped\n";
      return finish(flags, false);
    }
  }
  Query q = resolve_query(program_arg);
  auto report = classify_query(q, bounds);
  std::cout << print_report(report);
  for (const auto* v : report.in_order()) violation = violation || !v->holds;
  return finish(flags, violation);
}

int cmd_eval(const std::string& program_arg, const std::string& facts_inline,
             const std::string& facts_file) {
  std::cout << "command: eval " << program_arg << "\n";
  Query q = resolve_query(program_arg);
  Instance I = parse_facts(!facts_file.empty() ? read_file(facts_file) : facts_inline);
  std::cout << print_instance(eval_query(q, I));
  return 0;
}

int cmd_run(const GlobalFlags& flags, const std::string& scenario_path) {
  Scenario s = load_scenario(scenario_path);
  if (flags.seed) s.cfg.seed = *flags.seed;
  if (flags.max_steps) s.cfg.max_steps = *flags.max_steps;
  if (flags.fairness_bound) s.cfg.fairness_bound = *flags.fairness_bound;
  std::cout << "command: run " << scenario_path << " seed=" << s.cfg.seed
            << " mode=" << to_string(s.cfg.mode) << "\n";

  Protocol p = make_protocol(s.protocol_name, s.query);
  RunResult r;
  if (s.cfg.mode == RunMode::HeartbeatOnly) {
    r = run_heartbeat_only(p, s.network, s.input, s.policy, s.cfg.hb_rounds, s.model);
  } else if (s.cfg.mode == RunMode::Exhaustive) {
    auto explored = explore_schedules(p, s.network, s.input, s.policy, s.cfg.depth, s.cfg);
    std::cout << "branches: " << explored.branches
              << (explored.budget_exhausted ? " (budget exhausted)" : "") << "\n";
    for (const auto& f : explored.verdict.failures) std::cout << "failure: " << f.description << "\n";
    std::cout << (explored.verdict.computes ? "all branches agree\n" : "branches diverged\n");
    return finish(flags, !explored.verdict.computes);
  } else {
    r = run(p, s.network, s.input, s.policy, s.cfg);
  }
  std::cout << "result: converged=" << (r.converged ? "true" : "false")
            << " steps=" << r.steps_taken << " rounds=" << r.rounds_taken << "\n";
  std::cout << "output:\n" << print_instance(r.output);
  write_trace(flags, r);
  return finish(flags, !r.converged);
}

ModelTag default_model(const std::string& protocol) {
  if (protocol == "t_repl") return ModelTag::N2;
  if (protocol == "t_adom") return ModelTag::N1;
  return ModelTag::N0;
}

ModelTag parse_model_or(const std::string& name, ModelTag fallback) {
  if (name.empty()) return fallback;
  auto m = parse_model_tag(name);
  if (!m) throw ValidationError("unknown model " + name + " (expected N0, N1, N2, or N3)");
  return *m;
}

int cmd_cf_check(const GlobalFlags& flags, const std::string& protocol, const std::string& query,
                 const std::string& model_name, int max_nodes) {
  ModelTag model = parse_model_or(model_name, default_model(protocol));
  std::cout << "command: experiment cf-check protocol=" << protocol << " query=" << query
            << " model=" << to_string(model) << " max-nodes=" << max_nodes << "\n";
  Query q = corpus::builtin_query(query);
  Protocol p = make_protocol(protocol, q);
  auto verdict = check_coordination_free(p, q, model, corpus::standard_inputs(query),
                                         corpus::network_suite(max_nodes));
  for (const auto& f : verdict.failures)
    std::cout << "failure: " << f.description << "\nobserved:\n"
              << print_instance(f.observed) << "expected:\n"
              << print_instance(f.expected);
  std::cout << (verdict.computes ? "witnessed: heartbeat-only runs compute the query\n"
                                 : "not witnessed\n");
  return finish(flags, !verdict.computes);
}

int cmd_indist(const GlobalFlags& flags, const std::string& protocol, const std::string& query,
               const std::string& base_text, const std::string& fact_text,
               const std::string& model_name, int rounds) {
  ModelTag model =
      parse_model_or(model_name, protocol == "t_repl" ? ModelTag::N2 : ModelTag::N1);
  std::cout << "command: experiment indist protocol=" << protocol << " query=" << query
            << " model=" << to_string(model) << " rounds=" << rounds << "\n";
  Query q = corpus::builtin_query(query);
  Protocol p = make_protocol(protocol, q);
  Instance I = parse_facts(base_text);
  Instance added = parse_facts(fact_text);
  if (added.size() != 1) throw ValidationError("--fact must name exactly one fact");

  auto report = indistinguishability(p, q, I, *added.begin(), model, rounds);
  std::cout << "states-equal: " << (report.all_rounds_equal() ? "every round" : "DIVERGED")
            << "\n";
  std::cout << "node0-output:\n" << print_instance(report.node0_output);
  std::cout << "spurious:\n" << print_instance(report.spurious_output);
  if (!report.all_rounds_equal()) return 1;  // the reproduction itself failed
  return finish(flags, !report.spurious_output.empty());
}

int cmd_explore(const GlobalFlags& flags, const std::string& scenario_path, int depth,
                long max_branches) {
  Scenario s = load_scenario(scenario_path);
  if (flags.seed) s.cfg.seed = *flags.seed;
  std::cout << "command: experiment explore " << scenario_path << " depth=" << depth
            << " seed=" << s.cfg.seed << "\n";
  Protocol p = make_protocol(s.protocol_name, s.query);
  auto result = explore_schedules(p, s.network, s.input, s.policy, depth, s.cfg, max_branches);
  std::cout << "branches: " << result.branches
            << (result.budget_exhausted ? " (budget exhausted)" : "") << "\n";
  for (const auto& f : result.verdict.failures) std::cout << "failure: " << f.description << "\n";
  std::cout << (result.verdict.computes ? "all branches agree\n" : "branches diverged\n");
  return finish(flags, !result.verdict.computes);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordination-free query evaluation workbench"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  long max_steps_value = 0;
  int fairness_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the run seed");
  auto* steps_opt = app.add_option("--max-steps", max_steps_value, "override the step budget");
  auto* fair_opt =
      app.add_option("--fairness-bound", fairness_value, "override the fairness bound K");
  app.add_option("--trace-out", flags.trace_out, "write the run trace to a file");
  app.add_flag("--expect-refuted", flags.expect_refuted,
               "exit 0 when a violation/refutation is found, 1 otherwise");

  // classify
  auto* classify = app.add_subcommand("classify", "classify a program and its query");
  classify->fallthrough();
  std::string classify_program_arg;
  Bounds bounds;
  classify->add_option("program", classify_program_arg, "program file or built-in name")
      ->required();
  classify->add_option("--domain", bounds.domain_size, "instance domain size bound");
  classify->add_option("--max-facts", bounds.max_facts, "instance fact count bound");
  classify->add_option("--fresh", bounds.extra_fresh, "fresh constants available to additions");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a program on an instance");
  eval_cmd->fallthrough();
  std::string eval_program_arg, eval_facts, eval_facts_file;
  eval_cmd->add_option("program", eval_program_arg, "program file or built-in name")->required();
  eval_cmd->add_option("--facts", eval_facts, "inline fact text");
  eval_cmd->add_option("--facts-file", eval_facts_file, "fact file");

  // run
  auto* run_cmd = app.add_subcommand("run", "run a scenario file");
  run_cmd->fallthrough();
  std::string scenario_path;
  run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "verification experiments");
  experiment->fallthrough();
  experiment->require_subcommand(1);
  auto* cf = experiment->add_subcommand("cf-check", "coordination-freeness witnesses");
  cf->fallthrough();
  std::string cf_protocol, cf_query, cf_model;
  int cf_max_nodes = 3;
  cf->add_option("--protocol", cf_protocol)->required();
  cf->add_option("--query", cf_query)->required();
  cf->add_option("--model", cf_model, "defaults to the protocol's model");
  cf->add_option("--max-nodes", cf_max_nodes);

  auto* indist = experiment->add_subcommand("indist", "two-scenario indistinguishability");
  indist->fallthrough();
  std::string in_protocol, in_query, in_base, in_fact, in_model;
  int in_rounds = 8;
  indist->add_option("--protocol", in_protocol)->required();
  indist->add_option("--query", in_query)->required();
  indist->add_option("--base", in_base, "base instance fact text")->required();
  indist->add_option("--fact", in_fact, "the added fact")->required();
  indist->add_option("--model", in_model, "N1 or N2");
  indist->add_option("--rounds", in_rounds);

  auto* explore = experiment->add_subcommand("explore", "exhaustive schedule prefixes");
  explore->fallthrough();
  std::string explore_scenario;
  int explore_depth = 4;
  long explore_budget = 100000;
  explore->add_option("--scenario", explore_scenario)->required();
  explore->add_option("--depth", explore_depth);
  explore->add_option("--max-branches", explore_budget);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) flags.seed = seed_value;
  if (*steps_opt) flags.max_steps = max_steps_value;
  if (*fair_opt) flags.fairness_bound = fairness_value;

  try {
    if (app.got_subcommand(classify)) return cmd_classify(flags, classify_program_arg, bounds);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(eval_program_arg, eval_facts, eval_facts_file);
    if (app.got_subcommand(run_cmd)) return cmd_run(flags, scenario_path);
    if (app.got_subcommand(experiment)) {
      if (experiment->got_subcommand(cf))
        return cmd_cf_check(flags, cf_protocol, cf_query, cf_model, cf_max_nodes);
      if (experiment->got_subcommand(indist))
        return cmd_indist(flags, in_protocol, in_query, in_base, in_fact, in_model, in_rounds);
      if (experiment->got_subcommand(explore))
        return cmd_explore(flags, explore_scenario, explore_depth, explore_budget);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
