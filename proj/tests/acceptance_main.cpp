// Acceptance suite. Runs every criterion end to end and prints one PASS/FAIL
// line per criterion; the process exits non-zero if any criterion fails.
// Time budgets are asserted alongside the functional checks.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
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

#ifndef CFREE_CORPUS_DIR
#define CFREE_CORPUS_DIR "corpus"
#endif

namespace {

using namespace cfree;

Instance facts(const char* text) { return parse_facts(text); }
Fact fact(const char* text) { return *parse_facts(text).begin(); }

// Post-hoc soundness monitors shared by the run-based criteria: every
// observed output must stay inside the oracle result for the full input, and
// the constructibility guard must never fire.
struct Monitor {
  long runs = 0;
  long subset_failures = 0;
  long guard_violations = 0;
  std::string first_problem;

  void observe(const Instance& output, const Instance& oracle, const std::string& what) {
    ++runs;
    for (const auto& f : output) {
      if (!oracle.count(f)) {
        ++subset_failures;
        if (first_problem.empty()) first_problem = what + " over-emitted " + print_fact(f);
        return;
      }
    }
  }

  void guard_tripped(const std::string& what) {
    ++guard_violations;
    if (first_problem.empty()) first_problem = what + " raised a constructibility error";
  }
};

Monitor monitor;

struct Criterion {
  int number;
  std::string label;
  double budget_seconds;  // 0 = no budget
  std::function<bool(std::ostringstream&)> body;
};

bool run_criterion(const Criterion& c) {
  std::ostringstream detail;
  bool ok = false;
  auto start = std::chrono::steady_clock::now();
  try {
    ok = c.body(detail);
  } catch (const ConstructibilityError& e) {
    monitor.guard_tripped("criterion " + std::to_string(c.number));
    detail << "constructibility guard violation: " << e.what();
    ok = false;
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
    ok = false;
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
    detail << (detail.str().empty() ? "" : "; ") << "time budget exceeded ("
           << c.budget_seconds << "s)";
    ok = false;
  }
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.number << ": " << c.label << " ("
            << std::fixed << std::setprecision(2) << seconds << "s)";
  if (!detail.str().empty()) std::cout << " -- " << detail.str();
  std::cout << "\n";
  return ok;
}

// criterion 1: the path-length-one-but-not-two goldens
bool criterion1(std::ostringstream& detail) {
  auto q = corpus::remark33_query();
  if (eval_query(q, facts("e(a,b).")) != facts("answer().")) {
    detail << "eval on {e(a,b)} wrong";
    return false;
  }
  if (!eval_query(q, facts("e(a,b). e(b,c).")).empty()) {
    detail << "eval on {e(a,b), e(b,c)} should be empty";
    return false;
  }
  Program p = parse_program(read_file(std::string(CFREE_CORPUS_DIR) + "/remark33.dl"));
  if (classify_program(p) != ProgramClass::Stratified) {
    detail << "program class is not stratified";
    return false;
  }
  auto verdict = check_adom_monotone(q, Bounds{3, 3, 1});
  if (verdict.holds || !verdict.refutation) {
    detail << "adom-monotonicity was not refuted";
    return false;
  }
  Counterexample expected{facts("e(a,b)."), facts("e(b,c)."), fact("answer().")};
  if (!equivalent_up_to_renaming(*verdict.refutation, expected)) {
    detail << "counterexample is not a renaming of ({e(a,b)}, e(b,c)): got base "
           << print_instance(verdict.refutation->base);
    return false;
  }
  return true;
}

// criterion 2: complement identity + bounded adom-monotonicity over the
// semi-positive corpus, exhaustively at domain 3 / 4 facts
bool criterion2(std::ostringstream& detail) {
  auto corpus_programs = corpus::semipositive_corpus();
  if (corpus_programs.size() < 5) {
    detail << "corpus has fewer than 5 programs";
    return false;
  }
  for (const auto& [name, text] : corpus_programs) {
    Program p = parse_program(text);
    if (classify_program(p) != ProgramClass::SemiPositive) {
      detail << name << " is not semi-positive";
      return false;
    }
    Program positive = positivize(p);
    long checked = 0;
    auto en = enumerate_instances(p.edb, 3, 4);
    while (auto I = en.next()) {
      Instance extended = *I;
      for (const auto& f : complement(*I, p.edb)) extended.insert(f);
      if (eval(p, *I) != eval(positive, extended)) {
        detail << name << ": identity failed on " << print_instance(*I);
        return false;
      }
      ++checked;
    }
    if (checked < 2) {
      detail << name << ": enumeration covered too little";
      return false;
    }
    auto verdict = check_adom_monotone(Query::from_program(name, p), Bounds{3, 4, 1});
    if (!verdict.holds) {
      detail << name << ": adom-monotonicity refuted within bounds";
      return false;
    }
  }
  return true;
}

// criterion 3: the strictness witnesses of the monotonicity hierarchy
bool criterion3(std::ostringstream& detail) {
  const Bounds bounds{3, 3, 2};

  auto expect = [&](const ClassReport& r, bool mono, bool adom_holds, bool weak, bool inst,
                    const char* name) {
    if (r.monotone.holds != mono || r.adom.holds != adom_holds || r.weak_adom.holds != weak ||
        r.weak_instance.holds != inst) {
      detail << name << ": verdict table mismatch";
      return false;
    }
    return true;
  };

  if (!expect(classify_query(corpus::tc_query(), bounds), true, true, true, true, "tc"))
    return false;
  if (!expect(classify_query(corpus::asym_query(), bounds), false, true, true, true, "asym"))
    return false;

  auto winmove_report = classify_query(corpus::winmove_query(), bounds);
  if (!expect(winmove_report, false, false, true, true, "winmove")) return false;
  Counterexample winmove_expected{facts("move(a,b)."), facts("move(b,c)."), fact("won(a).")};
  if (!equivalent_up_to_renaming(*winmove_report.adom.refutation, winmove_expected)) {
    detail << "winmove adom witness is not a renaming of ({move(a,b)}, move(b,c))";
    return false;
  }

  auto remark_report = classify_query(corpus::remark33_query(), bounds);
  if (!expect(remark_report, false, false, false, false, "remark33")) return false;
  Counterexample remark_expected{facts("e(a,b)."), facts("e(c,c)."), fact("answer().")};
  if (!equivalent_up_to_renaming(*remark_report.weak_adom.refutation, remark_expected)) {
    detail << "remark33 weak-adom witness is not a renaming of ({e(a,b)}, e(c,c))";
    return false;
  }
  return true;
}

// criterion 4: distributed computation across networks, policies, and seeds
bool criterion4(std::ostringstream& detail) {
  auto networks = corpus::network_suite(4);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);

  struct PairCase {
    std::string protocol;
    Query query;
    PolicyGenerator policies;
    ModelTag model;
  } cases[] = {
      {"t_mono", corpus::tc_query(), corpus::arbitrary_policies(), ModelTag::N0},
      {"t_adom", corpus::asym_query(), corpus::arbitrary_policies(), ModelTag::N1},
      {"t_repl", corpus::winmove_query(), corpus::compatible_policies(), ModelTag::N2},
  };

  for (auto& c : cases) {
    Protocol p = make_protocol(c.protocol, c.query);
    RunConfig cfg;
    cfg.model = c.model;
    auto inputs = corpus::standard_inputs(c.query.name());
    auto verdict = check_computes(p, c.query, inputs, networks, c.policies, seeds, cfg);
    long combos = 0;
    for (const auto& net : networks)
      combos += static_cast<long>(c.policies(net).size()) * static_cast<long>(seeds.size()) *
                static_cast<long>(inputs.size());
    monitor.runs += combos;
    if (!verdict.computes) {
      ++monitor.subset_failures;
      detail << c.protocol << "/" << c.query.name() << ": " << verdict.failures.size()
             << " failing runs; first: " << verdict.failures[0].description;
      if (monitor.first_problem.empty()) monitor.first_problem = verdict.failures[0].description;
      return false;
    }
  }
  return true;
}

// criterion 5: coordination-freeness witnesses under heartbeat-only runs
bool criterion5(std::ostringstream& detail) {
  struct PairCase {
    std::string protocol;
    Query query;
    ModelTag model;
  } cases[] = {
      {"t_mono", corpus::tc_query(), ModelTag::N0},
      {"t_adom", corpus::asym_query(), ModelTag::N1},
      {"t_repl", corpus::winmove_query(), ModelTag::N2},
  };
  auto networks = corpus::network_suite(3);
  for (auto& c : cases) {
    Protocol p = make_protocol(c.protocol, c.query);
    for (const auto& I : corpus::standard_inputs(c.query.name())) {
      Instance oracle = eval_query(c.query, I);
      for (const auto& net : networks) {
        auto policy = all_on_node_policy(c.model, NodeId{0});
        auto r = run_heartbeat_only(p, net, I, policy, 64, c.model);
        monitor.observe(r.output, oracle, c.protocol + " heartbeat-only");
        for (const auto& ev : r.trace) {
          if (ev.kind != StepInput::Heartbeat) {
            detail << c.protocol << ": a message was delivered in a heartbeat-only run";
            return false;
          }
        }
        if (!r.converged || r.output != oracle) {
          detail << c.protocol << "/" << c.query.name() << " nodes=" << net.node_count()
                 << ": heartbeat-only output wrong";
          return false;
        }
      }
    }
  }
  return true;
}

// criterion 6: the two-scenario indistinguishability reproduction
bool criterion6(std::ostringstream& detail) {
  auto q = corpus::remark33_query();

  auto n1 = indistinguishability(make_t_adom(q), q, facts("e(a,b)."), fact("e(b,c)."),
                                 ModelTag::N1, 8);
  if (!n1.all_rounds_equal()) {
    detail << "N1: node states diverged between the scenarios";
    return false;
  }
  if (n1.spurious_output != facts("answer().")) {
    detail << "N1: spurious output is " << print_instance(n1.spurious_output);
    return false;
  }

  auto n2 = indistinguishability(make_t_repl(q), q, facts("e(a,b)."), fact("e(c,c)."),
                                 ModelTag::N2, 8);
  if (!n2.all_rounds_equal()) {
    detail << "N2: node states diverged between the scenarios";
    return false;
  }
  if (n2.spurious_output != facts("answer().")) {
    detail << "N2: spurious output is " << print_instance(n2.spurious_output);
    return false;
  }

  // the single-node sides are valid configurations; monitor them
  auto q_asym = corpus::asym_query();
  auto sane = indistinguishability(make_t_adom(q_asym), q_asym, facts("e(a,b)."), fact("e(c,d)."),
                                   ModelTag::N1, 8);
  if (!sane.all_rounds_equal() || !sane.spurious_output.empty()) {
    detail << "adom-monotone control produced spurious output";
    return false;
  }
  monitor.observe(sane.node0_output, eval_query(q_asym, facts("e(a,b). e(c,d).")),
                  "indist control");
  return true;
}

// criterion 7: schedule exploration plus seeded replayability
bool criterion7(std::ostringstream& detail) {
  struct Case {
    std::string protocol;
    Query query;
    Instance input;
    DistributionPolicy policy;
    ModelTag model;
  };
  ConstantAssignment hash_assignment;
  hash_assignment.default_kind = ConstantAssignment::DefaultKind::Hash;
  hash_assignment.node_count = 2;
  std::vector<Case> cases;
  cases.push_back({"t_mono", corpus::tc_query(), facts("e(a,b). e(b,c). e(c,d)."),
                   DistributionPolicy::hash(2), ModelTag::N0});
  cases.push_back({"t_adom", corpus::asym_query(), facts("e(a,b). e(b,a). e(a,c)."),
                   DistributionPolicy::hash(2), ModelTag::N1});
  cases.push_back({"t_repl", corpus::winmove_query(), facts("move(a,b). move(b,c). move(c,d)."),
                   DistributionPolicy::constant_map(hash_assignment, "constant_map(hash)"),
                   ModelTag::N2});

  auto net = line_graph(2);
  for (auto& c : cases) {
    Protocol p = make_protocol(c.protocol, c.query);
    Instance oracle = eval_query(c.query, c.input);
    RunConfig cfg;
    cfg.model = c.model;

    auto explored = explore_schedules(p, net, c.input, c.policy, 4, cfg);
    monitor.runs += explored.branches;
    if (!explored.verdict.computes || explored.budget_exhausted) {
      detail << c.protocol << ": schedule exploration diverged or ran out of budget ("
             << explored.branches << " branches)";
      if (!explored.verdict.failures.empty() && monitor.first_problem.empty())
        monitor.first_problem = explored.verdict.failures[0].description;
      return false;
    }

    Instance reference_output;
    std::string reference_trace;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      cfg.seed = seed;
      auto r = run(p, net, c.input, c.policy, cfg);
      monitor.observe(r.output, oracle, c.protocol + " seed run");
      if (!r.converged) {
        detail << c.protocol << " seed " << seed << ": did not converge";
        return false;
      }
      if (seed == 1) {
        reference_output = r.output;
        reference_trace = render_trace(r);
      } else if (r.output != reference_output) {
        detail << c.protocol << " seed " << seed << ": output differs from seed 1";
        return false;
      }
    }
    if (reference_output != oracle) {
      detail << c.protocol << ": converged output differs from the query result";
      return false;
    }
    cfg.seed = 1;
    auto replay = run(p, net, c.input, c.policy, cfg);
    if (render_trace(replay) != reference_trace) {
      detail << c.protocol << ": seed-1 trace failed to replay bit-identically";
      return false;
    }
  }
  return true;
}

// criterion 8: the accumulated soundness monitors
bool criterion8(std::ostringstream& detail) {
  if (monitor.runs == 0) {
    detail << "no runs were monitored";
    return false;
  }
  if (monitor.subset_failures != 0 || monitor.guard_violations != 0) {
    detail << monitor.subset_failures << " outputs escaped the oracle result, "
           << monitor.guard_violations << " guard violations; first: " << monitor.first_problem;
    return false;
  }
  detail << monitor.runs << " runs monitored";
  return true;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "path-length query goldens and renamed counterexample", 1.0, criterion1},
      {2, "complement identity suite over the semi-positive corpus", 60.0, criterion2},
      {3, "monotonicity hierarchy strictness witnesses", 120.0, criterion3},
      {4, "distributed computation across networks, policies, seeds", 300.0, criterion4},
      {5, "coordination-freeness witnesses, heartbeat-only", 0.0, criterion5},
      {6, "two-scenario indistinguishability reproduction", 0.0, criterion6},
      {7, "schedule exploration and seeded replayability", 0.0, criterion7},
      {8, "soundness monitors across all runs", 0.0, criterion8},
  };

  int failures = 0;
  for (const auto& c : criteria)
    if (!run_criterion(c)) ++failures;

  if (failures == 0) {
    std::cout << "acceptance: all " << criteria.size() << " criteria passed\n";
  } else {
    std::cout << "acceptance: " << failures << " criteria FAILED\n";
  }
  return failures == 0 ? 0 : 1;
}
