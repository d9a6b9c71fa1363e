#pragma once

/// Deterministic seeded execution of a transducer network: per-node input
/// buffers (bags), a fair scheduler with a bounded-delay guarantee,
/// heartbeat-only runs, quiescence detection, schedule exploration, and the
/// two-scenario indistinguishability experiment.
///
/// Randomness comes from one mt19937_64 generator per run; draws happen in a
/// fixed, documented order (one shuffle of the node order per round, then
/// one action draw per node), so equal configurations replay bit-identically
/// on every platform.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfree/datalog.hpp"
#include "cfree/netmodel.hpp"
#include "cfree/relcore.hpp"
#include "cfree/transducer.hpp"

namespace cfree {

enum class RunMode { FairRandom, HeartbeatOnly, Exhaustive };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::FairRandom: return "fair-random";
    case RunMode::HeartbeatOnly: return "heartbeat-only";
    case RunMode::Exhaustive: return "exhaustive";
  }
  return "?";
}

struct RunConfig {
  std::uint64_t seed = 1;
  int fairness_bound = 3;  // K: deliveries and heartbeats happen within K rounds
  long max_steps = 200000;
  RunMode mode = RunMode::FairRandom;
  int depth = 0;        // exhaustive mode
  int hb_rounds = 64;   // heartbeat-only round cap
  ModelTag model = ModelTag::N1;
};

struct TraceEvent {
  long step = 0;
  long round = 0;
  NodeId node{0};
  StepInput::Kind kind = StepInput::Heartbeat;
  std::optional<Fact> delivered;
  Instance messages;  // sent to all neighbors of `node`
  Instance emitted;
};

struct RunResult {
  Instance output;
  bool converged = false;
  long steps_taken = 0;
  long rounds_taken = 0;
  std::vector<TraceEvent> trace;
};

/// One line per event, then `result converged=<bool> steps=<n>`. `sent` is
/// the number of message facts the step produced (each goes to every
/// neighbor). Stable across platforms for golden-file testing.
inline std::string render_trace(const RunResult& r) {
  std::ostringstream out;
  for (const auto& ev : r.trace) {
    out << "step=" << ev.step << " node=" << ev.node.value
        << " ev=" << (ev.kind == StepInput::Heartbeat ? "hb" : "dv")
        << " fact=" << (ev.delivered ? print_fact(*ev.delivered) : "-")
        << " sent=" << ev.messages.size() << " emit=";
    if (ev.emitted.empty()) {
      out << "-";
    } else {
      bool first = true;
      for (const auto& f : ev.emitted) {
        if (!first) out << ",";
        out << print_fact(f);
        first = false;
      }
    }
    out << "\n";
  }
  out << "result converged=" << (r.converged ? "true" : "false") << " steps=" << r.steps_taken
      << "\n";
  return out.str();
}

namespace detail {

/// Seeded generator with documented, platform-independent draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t bounded(std::size_t n) { return n <= 1 ? 0 : gen_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

struct BufferEntry {
  Fact fact;
  long enqueue_round;
};

/// A transducer network mid-run: per-node states plus input buffers.
/// Copyable, so schedule exploration can branch. Holds the protocol and the
/// graph by reference; temporaries are rejected at compile time.
class Sim {
 public:
  Sim(const Protocol&, NetworkGraph&&, const Instance&, const DistributionPolicy&,
      ModelTag) = delete;
  Sim(Protocol&&, const NetworkGraph&, const Instance&, const DistributionPolicy&,
      ModelTag) = delete;

  Sim(const Protocol& p, const NetworkGraph& net, const Instance& input,
      const DistributionPolicy& policy, ModelTag model)
      : protocol_(&p), net_(&net) {
    auto locals = distribute(input, policy, net);
    auto shared_policy = std::make_shared<DistributionPolicy>(policy);
    std::vector<NodeId> all(net.nodes().begin(), net.nodes().end());
    auto global = adom(input);
    for (const auto& n : net.nodes()) {
      TransducerState st;
      st.node = n;
      st.input = locals.at(n);
      st.system.self = n;
      st.system.all_nodes = all;
      st.system.policy = shared_policy;
      if (model == ModelTag::N3) st.system.global_adom = global;
      st.memory = p.init(st.input);
      states_.push_back(std::move(st));
      buffers_.emplace_back();
    }
  }

  int node_count() const { return static_cast<int>(states_.size()); }
  const TransducerState& state(NodeId n) const { return states_[size_t(n.value)]; }
  const std::vector<BufferEntry>& buffer(NodeId n) const { return buffers_[size_t(n.value)]; }

  TraceEvent heartbeat(NodeId n, long round) { return exec(n, StepInput::heartbeat(), round); }

  TraceEvent deliver(NodeId n, std::size_t index, long round) {
    auto& buf = buffers_[size_t(n.value)];
    Fact f = buf[index].fact;
    buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(index));
    return exec(n, StepInput::deliver(std::move(f)), round);
  }

  bool buffers_empty() const {
    for (const auto& b : buffers_)
      if (!b.empty()) return false;
    return true;
  }

  /// True once every buffer is empty and a heartbeat would be a no-op
  /// everywhere. Probing is pure: step functions have no side effects.
  bool quiescent() const {
    if (!buffers_empty()) return false;
    for (const auto& st : states_)
      if (!protocol_->step(st, StepInput::heartbeat()).no_op()) return false;
    return true;
  }

  bool heartbeat_fixpoint() const {
    for (const auto& st : states_)
      if (!protocol_->step(st, StepInput::heartbeat()).no_op()) return false;
    return true;
  }

  /// Union of the emitted output over all nodes.
  Instance output() const {
    Instance out;
    for (const auto& st : states_) out.insert(st.emitted.begin(), st.emitted.end());
    return out;
  }

 private:
  TraceEvent exec(NodeId n, const StepInput& in, long round) {
    TransducerState& st = states_[size_t(n.value)];
    StepOutput out = protocol_->step(st, in);
    apply_step(st, out);
    for (const auto& neighbor : net_->neighbors(n))
      for (const auto& msg : out.messages)
        buffers_[size_t(neighbor.value)].push_back({msg, round});
    TraceEvent ev;
    ev.round = round;
    ev.node = n;
    ev.kind = in.kind;
    ev.delivered = in.message;
    ev.messages = out.messages;
    ev.emitted = out.new_output;
    return ev;
  }

  const Protocol* protocol_;
  const NetworkGraph* net_;
  std::vector<TransducerState> states_;
  std::vector<std::vector<BufferEntry>> buffers_;
};

/// The fair-random scheduler. Each round visits every node once in a seeded
/// order; a node first delivers every buffered fact whose deadline (K rounds
/// after enqueue) has arrived, heartbeats if it has not heartbeat within the
/// last K rounds, and then takes one seeded action chosen uniformly among
/// heartbeat and each buffered fact.
inline RunResult fair_loop(Sim& sim, const RunConfig& cfg, bool keep_trace) {
  RunResult result;
  Rng rng(cfg.seed);
  const long k = std::max(1, cfg.fairness_bound);
  std::vector<long> last_hb(static_cast<size_t>(sim.node_count()), 0);
  long steps = 0;
  bool out_of_steps = false;

  auto record = [&](TraceEvent ev) {
    ev.step = ++steps;
    if (keep_trace) result.trace.push_back(std::move(ev));
  };

  long round = 0;
  while (!out_of_steps) {
    ++round;
    std::vector<NodeId> order;
    for (int i = 0; i < sim.node_count(); ++i) order.push_back(NodeId{i});
    rng.shuffle(order);
    for (const auto& n : order) {
      // overdue deliveries first
      while (!out_of_steps) {
        const auto& buf = sim.buffer(n);
        std::size_t index = buf.size();
        for (std::size_t i = 0; i < buf.size(); ++i)
          if (round - buf[i].enqueue_round >= k) {
            index = i;
            break;
          }
        if (index == buf.size()) break;
        if (steps >= cfg.max_steps) {
          out_of_steps = true;
          break;
        }
        record(sim.deliver(n, index, round));
      }
      if (out_of_steps) break;
      // overdue heartbeat
      if (round - last_hb[size_t(n.value)] >= k) {
        if (steps >= cfg.max_steps) {
          out_of_steps = true;
          break;
        }
        record(sim.heartbeat(n, round));
        last_hb[size_t(n.value)] = round;
      }
      // one seeded action
      std::size_t action = rng.bounded(sim.buffer(n).size() + 1);
      if (steps >= cfg.max_steps) {
        out_of_steps = true;
        break;
      }
      if (action < sim.buffer(n).size()) {
        record(sim.deliver(n, action, round));
      } else {
        record(sim.heartbeat(n, round));
        last_hb[size_t(n.value)] = round;
      }
    }
    if (!out_of_steps && sim.quiescent()) {
      result.converged = true;
      break;
    }
  }

  result.output = sim.output();
  result.steps_taken = steps;
  result.rounds_taken = round;
  return result;
}

}  // namespace detail

/// Distributes the input, then runs the seeded fair scheduler until
/// quiescence (all buffers empty and every heartbeat a no-op) or until
/// max_steps is exhausted, in which case converged is false.
inline RunResult run(const Protocol& p, const NetworkGraph& net, const Instance& input,
                     const DistributionPolicy& policy, const RunConfig& cfg,
                     bool keep_trace = true) {
  detail::Sim sim(p, net, input, policy, cfg.model);
  return detail::fair_loop(sim, cfg, keep_trace);
}

/// Steps every node with heartbeats only, round-robin, until every node
/// reaches its heartbeat fixpoint or the round cap is hit. Sends accumulate
/// in the buffers untouched; nothing is ever delivered.
inline RunResult run_heartbeat_only(const Protocol& p, const NetworkGraph& net,
                                    const Instance& input, const DistributionPolicy& policy,
                                    int rounds, ModelTag model = ModelTag::N1,
                                    bool keep_trace = true) {
  if (rounds < 1) throw ValidationError("heartbeat-only runs need at least one round");
  detail::Sim sim(p, net, input, policy, model);
  RunResult result;
  long steps = 0;
  long round = 0;
  for (round = 1; round <= rounds; ++round) {
    bool all_no_op = true;
    for (int i = 0; i < sim.node_count(); ++i) {
      TraceEvent ev = sim.heartbeat(NodeId{i}, round);
      ev.step = ++steps;
      all_no_op = all_no_op && ev.messages.empty() && ev.emitted.empty();
      if (keep_trace) result.trace.push_back(std::move(ev));
    }
    if (all_no_op && sim.heartbeat_fixpoint()) {
      result.converged = true;
      break;
    }
  }
  result.output = sim.output();
  result.steps_taken = steps;
  result.rounds_taken = std::min<long>(round, rounds);
  return result;
}

struct Failure {
  std::string description;
  Instance observed;
  Instance expected;
};

struct Verdict {
  bool computes = true;
  std::vector<Failure> failures;
};

/// Sampled check of distributed computation: for every combination of input,
/// network, generated policy, and seed, run to quiescence and compare the
/// global output to the query's own evaluation. Failures carry a replayable
/// description.
inline Verdict check_computes(const Protocol& p, const Query& q,
                              const std::vector<Instance>& inputs,
                              const std::vector<NetworkGraph>& networks,
                              const PolicyGenerator& policies,
                              const std::vector<std::uint64_t>& seeds,
                              RunConfig base_cfg = RunConfig{}) {
  Verdict verdict;
  int input_index = 0;
  for (const auto& I : inputs) {
    ++input_index;
    Instance expected = q(I);
    for (const auto& net : networks) {
      for (const auto& policy : policies(net)) {
        for (auto seed : seeds) {
          RunConfig cfg = base_cfg;
          cfg.seed = seed;
          RunResult r = run(p, net, I, policy, cfg, /*keep_trace=*/false);
          if (!r.converged || r.output != expected) {
            std::ostringstream desc;
            desc << p.name << "/" << q.name() << " input#" << input_index << " nodes="
                 << net.node_count() << " edges=" << net.edges().size() << " policy="
                 << policy.describe() << " seed=" << seed
                 << (r.converged ? "" : " (did not converge)");
            verdict.computes = false;
            verdict.failures.push_back({desc.str(), r.output, expected});
          }
        }
      }
    }
  }
  return verdict;
}

/// The all-on-one-node policy family used as the existence witness:
/// a constant-map with F mapping everything to node 0 under N2, the
/// single-node policy otherwise.
inline DistributionPolicy all_on_node_policy(ModelTag model, NodeId home) {
  if (model == ModelTag::N2) {
    ConstantAssignment F;
    F.default_kind = ConstantAssignment::DefaultKind::FixedSet;
    F.default_nodes = {home};
    F.nullary_home = home;
    return DistributionPolicy::constant_map(F, "constant_map(all->" + to_string(home) + ")");
  }
  return DistributionPolicy::single_node(home);
}

/// Coordination-freeness witness: for each input and network, place all data
/// on one node compatibly with the model and check that heartbeat-only
/// execution already produces the query result, with zero deliveries.
inline Verdict check_coordination_free(const Protocol& p, const Query& q, ModelTag model,
                                       const std::vector<Instance>& inputs,
                                       const std::vector<NetworkGraph>& networks,
                                       int rounds = 64) {
  Verdict verdict;
  int input_index = 0;
  for (const auto& I : inputs) {
    ++input_index;
    Instance expected = q(I);
    for (const auto& net : networks) {
      auto policy = all_on_node_policy(model, NodeId{0});
      RunResult r = run_heartbeat_only(p, net, I, policy, rounds, model, /*keep_trace=*/false);
      if (!r.converged || r.output != expected) {
        std::ostringstream desc;
        desc << p.name << "/" << q.name() << " input#" << input_index << " nodes="
             << net.node_count() << " heartbeat-only"
             << (r.converged ? "" : " (no heartbeat fixpoint)");
        verdict.computes = false;
        verdict.failures.push_back({desc.str(), r.output, expected});
      }
    }
  }
  return verdict;
}

/// Two-scenario experiment. Scenario 1: a single node holding I. Scenario 2:
/// two nodes, input I plus one extra fact placed on the second node by the
/// exception policy (N1) or by a compatible assignment over the fact's fresh
/// constants (N2). Both run heartbeat-only; after every round the first
/// node's observable state must coincide across scenarios. Output the first
/// node produces beyond Q(I + f) is reported as spurious.
struct IndistinguishabilityReport {
  std::vector<bool> states_equal_per_round;
  Instance spurious_output;
  Instance node0_output;

  bool all_rounds_equal() const {
    for (bool b : states_equal_per_round)
      if (!b) return false;
    return true;
  }
};

inline IndistinguishabilityReport indistinguishability(const Protocol& p, const Query& q,
                                                       const Instance& I, const Fact& f,
                                                       ModelTag model, int rounds) {
  if (model != ModelTag::N1 && model != ModelTag::N2)
    throw ValidationError("the two-scenario experiment runs under N1 or N2 only");
  if (I.count(f)) throw ValidationError("the added fact is already part of the base instance");
  auto base_dom = adom(I);
  if (model == ModelTag::N1) {
    bool has_new = false;
    for (const auto& c : f.args)
      if (!base_dom.count(c)) has_new = true;
    if (!has_new)
      throw ValidationError("under N1 the added fact must carry a constant outside the base");
  } else {
    if (f.args.empty()) throw ValidationError("under N2 the added fact must be non-nullary");
    for (const auto& c : f.args)
      if (base_dom.count(c))
        throw ValidationError("under N2 the added fact must use only constants outside the base");
  }

  NodeId n0{0}, n1{1};
  NetworkGraph net1(1, {});
  NetworkGraph net2(2, {{0, 1}});
  DistributionPolicy policy1 = all_on_node_policy(model, n0);
  DistributionPolicy policy2 =
      model == ModelTag::N1
          ? two_node_exception_policy(I, f, n0, n1)
          : compatible_policy(two_node_exception_assignment(I, f, n0, n1), q.input_schema());

  Instance extended = I;
  extended.insert(f);

  detail::Sim sim1(p, net1, I, policy1, model);
  detail::Sim sim2(p, net2, extended, policy2, model);

  IndistinguishabilityReport report;
  for (int r = 1; r <= rounds; ++r) {
    sim1.heartbeat(n0, r);
    sim2.heartbeat(n0, r);
    sim2.heartbeat(n1, r);
    report.states_equal_per_round.push_back(state_equal(sim1.state(n0), sim2.state(n0)));
  }
  report.node0_output = sim2.state(n0).emitted;
  Instance truth = q(extended);
  for (const auto& w : report.node0_output)
    if (!truth.count(w)) report.spurious_output.insert(w);
  return report;
}

/// Exhaustively explores every scheduling choice (which node steps; deliver
/// which buffered fact vs heartbeat) up to `depth`, completing each branch
/// with the fair seeded scheduler, and checks that every branch ends in the
/// same global output.
struct ExploreResult {
  Verdict verdict;
  long branches = 0;
  bool budget_exhausted = false;
};

inline ExploreResult explore_schedules(const Protocol& p, const NetworkGraph& net,
                                       const Instance& input, const DistributionPolicy& policy,
                                       int depth, RunConfig cfg = RunConfig{},
                                       long max_branches = 100000) {
  ExploreResult result;
  std::optional<Instance> reference;

  std::function<void(const detail::Sim&, int)> dfs = [&](const detail::Sim& sim, int d) {
    if (result.budget_exhausted) return;
    if (d >= depth) {
      if (result.branches >= max_branches) {
        result.budget_exhausted = true;
        return;
      }
      detail::Sim completion = sim;
      RunResult r = detail::fair_loop(completion, cfg, /*keep_trace=*/false);
      ++result.branches;
      std::ostringstream desc;
      desc << p.name << " branch#" << result.branches << " depth=" << depth
           << " seed=" << cfg.seed;
      if (!r.converged) {
        result.verdict.computes = false;
        result.verdict.failures.push_back({desc.str() + " (did not converge)", r.output, {}});
        return;
      }
      if (!reference) {
        reference = r.output;
      } else if (r.output != *reference) {
        result.verdict.computes = false;
        result.verdict.failures.push_back({desc.str() + " (diverged)", r.output, *reference});
      }
      return;
    }
    for (int i = 0; i < sim.node_count() && !result.budget_exhausted; ++i) {
      NodeId n{i};
      {
        detail::Sim next = sim;
        next.heartbeat(n, 0);
        dfs(next, d + 1);
      }
      std::set<Fact> tried;  // delivering either copy of a fact is equivalent
      const auto& buf = sim.buffer(n);
      for (std::size_t j = 0; j < buf.size() && !result.budget_exhausted; ++j) {
        if (!tried.insert(buf[j].fact).second) continue;
        detail::Sim next = sim;
        next.deliver(n, j, 0);
        dfs(next, d + 1);
      }
    }
  };

  detail::Sim base(p, net, input, policy, cfg.model);
  dfs(base, 0);
  return result;
}

}  // namespace cfree
