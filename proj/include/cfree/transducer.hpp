#pragma once

/// The relational transducer step contract — read-only input, relational
/// memory, system relations, one-fact-at-a-time message consumption,
/// append-only output — and the three protocol constructions:
///
///   t_mono  flood every input fact, evaluate the query over everything seen
///           (correct for monotone queries);
///   t_adom  additionally certify absent facts over the known constants via
///           the policy oracle and evaluate only when the local slice is
///           fully resolved (correct for queries monotone under additions
///           carrying a new constant);
///   t_repl  under constant-replicated placement, track per-constant
///           ownership and per-column completeness certificates driven by
///           acknowledgements, and evaluate only when every known constant
///           is covered (correct for queries monotone under additions
///           carrying only new constants).
///
/// All three share one flood substrate: every first-seen message fact is
/// re-sent to all neighbors exactly once, and a node's own broadcasts are
/// fed back to itself immediately.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfree/datalog.hpp"
#include "cfree/netmodel.hpp"
#include "cfree/relcore.hpp"

namespace cfree {

struct ProtocolError : Error {
  using Error::Error;
};

/// Read-only per-node system information: own id, all node ids, the policy
/// oracle, and (populated by the simulator under N3 only) the active domain
/// of the global input. Transducers may ask the oracle about their own
/// membership only, and only for facts whose constants they know.
struct SystemInfo {
  NodeId self{0};
  std::vector<NodeId> all_nodes;
  std::shared_ptr<const DistributionPolicy> policy;
  std::optional<std::set<Constant>> global_adom;

  bool placed_here(const Fact& f, const std::set<Constant>& known) const {
    return oracle_query(*policy, self, f, known);
  }
};

struct TransducerState {
  NodeId node{0};
  Instance input;   // never changes after initialization
  Instance memory;  // relational protocol state
  SystemInfo system;
  Instance emitted;  // append-only output accumulator
};

struct StepInput {
  enum Kind { Heartbeat, Deliver } kind = Heartbeat;
  std::optional<Fact> message;  // exactly one fact for Deliver

  static StepInput heartbeat() { return {Heartbeat, std::nullopt}; }
  static StepInput deliver(Fact f) { return {Deliver, std::move(f)}; }
};

struct StepOutput {
  Instance new_output;
  Instance messages;  // each goes to all graph neighbors of the sender
  Instance mem_insert;
  Instance mem_delete;

  bool no_op() const {
    return new_output.empty() && messages.empty() && mem_insert.empty() && mem_delete.empty();
  }
};

/// Deterministic, total step machine. `step` reads nothing outside the
/// passed state and input; the caller applies the returned deltas.
struct Protocol {
  std::string name;
  Schema edb;  // the wrapped query's input schema
  Schema memory_schema;
  Schema message_schema;
  std::function<Instance(const Instance& local_input)> init;
  std::function<StepOutput(const TransducerState&, const StepInput&)> step;
};

/// Memory updates apply deletions first, then insertions (insert wins).
inline void apply_step(TransducerState& s, const StepOutput& out) {
  for (const auto& f : out.mem_delete) s.memory.erase(f);
  for (const auto& f : out.mem_insert) s.memory.insert(f);
  for (const auto& f : out.new_output) s.emitted.insert(f);
}

/// Equality of the observable transducer configuration: local input, memory,
/// and emitted output. Node ids and the oracle handle are excluded.
inline bool state_equal(const TransducerState& a, const TransducerState& b) {
  return a.input == b.input && a.memory == b.memory && a.emitted == b.emitted;
}

inline StepOutput step(const Protocol& p, const TransducerState& s, const StepInput& in) {
  return p.step(s, in);
}

namespace detail {

// Relation names minted by the protocols contain "__", which the user-facing
// rule grammar permits but the protocol constructors reject in query
// schemas, so the namespaces cannot collide.
inline void check_protocol_safe_schema(const Schema& schema) {
  for (const auto& r : schema.relations())
    if (r.name.find("__") != std::string::npos)
      throw ValidationError("relation name " + r.name +
                            " contains '__', which is reserved for protocol relations");
}

inline RelSymbol seen_rel(const RelSymbol& msg) { return {"seen__" + msg.name, msg.arity}; }

inline Constant node_constant(NodeId n) { return Constant(to_string(n)); }
inline Constant column_constant(int i) { return Constant("i" + std::to_string(i)); }

inline const Constant kPresent{"present"};
inline const Constant kAbsent{"absent"};

/// Overlay over a state's memory: lookups see memory plus staged inserts;
/// the staged set becomes the step's mem_insert.
class MemStage {
 public:
  explicit MemStage(const Instance& memory) : memory_(memory) {}

  bool contains(const Fact& f) const { return memory_.count(f) > 0 || staged_.count(f) > 0; }
  void insert(const Fact& f) {
    if (!memory_.count(f)) staged_.insert(f);
  }

  /// All facts of `rel`, staged view.
  std::vector<Fact> with_rel(const RelSymbol& rel) const {
    std::vector<Fact> out;
    for (const auto& f : memory_)
      if (f.rel == rel) out.push_back(f);
    for (const auto& f : staged_)
      if (f.rel == rel) out.push_back(f);
    return out;
  }

  const Instance& staged() const { return staged_; }

 private:
  const Instance& memory_;
  Instance staged_;
};

/// Per-step working set shared by the three protocols: staged memory, the
/// outgoing message set, and flood bookkeeping. `receive` handles an
/// incoming message (dedup, payload, forward); `originate` broadcasts a new
/// message and feeds it back to this node immediately.
struct FloodContext {
  const TransducerState& s;
  MemStage mem;
  Instance sends;
  std::function<void(FloodContext&, const Fact&)> payload;

  FloodContext(const TransducerState& state,
               std::function<void(FloodContext&, const Fact&)> payload_fn)
      : s(state), mem(state.memory), payload(std::move(payload_fn)) {}

  void receive(const Fact& msg) {
    Fact seen(seen_rel(msg.rel), msg.args);
    if (mem.contains(seen)) return;  // duplicate delivery
    mem.insert(seen);
    sends.insert(msg);  // forward once
    payload(*this, msg);
  }

  void originate(const Fact& msg) {
    Fact seen(seen_rel(msg.rel), msg.args);
    if (mem.contains(seen)) return;  // already broadcast or received
    mem.insert(seen);
    sends.insert(msg);
    payload(*this, msg);
  }
};

inline StepOutput finish(const TransducerState& s, FloodContext& ctx, const Instance& result) {
  StepOutput out;
  out.mem_insert = ctx.mem.staged();
  out.messages = std::move(ctx.sends);
  for (const auto& f : result)
    if (!s.emitted.count(f)) out.new_output.insert(f);
  return out;
}

inline void check_message(const Protocol& p, const StepInput& in) {
  if (in.kind == StepInput::Deliver) {
    if (!in.message) throw ProtocolError(p.name + ": deliver step without a message fact");
    if (!p.message_schema.contains(in.message->rel))
      throw ProtocolError(p.name + ": delivered fact " + print_fact(*in.message) +
                          " is not over the message schema");
  }
}

inline std::set<Constant> constants_of(const std::vector<Fact>& facts) {
  std::set<Constant> out;
  for (const auto& f : facts) out.insert(f.args.begin(), f.args.end());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// t_mono: broadcast-and-evaluate.

inline Protocol make_t_mono(const Query& q) {
  detail::check_protocol_safe_schema(q.input_schema());
  detail::check_protocol_safe_schema(q.output_schema());

  struct Tables {
    Query q;
    std::map<RelSymbol, RelSymbol> fact_msg;    // R -> m__fact_R
    std::map<RelSymbol, RelSymbol> msg_to_rel;  // m__fact_R -> R
  };
  auto t = std::make_shared<Tables>(Tables{q, {}, {}});
  Protocol p;
  p.name = "t_mono";
  p.edb = q.input_schema();
  for (const auto& r : q.input_schema().relations()) {
    RelSymbol m{"m__fact_" + r.name, r.arity};
    t->fact_msg[r] = m;
    t->msg_to_rel[m] = r;
    p.message_schema.add(m);
    p.memory_schema.add(detail::seen_rel(m));
  }
  p.init = [](const Instance&) { return Instance{}; };

  p.step = [t, p](const TransducerState& s, const StepInput& in) -> StepOutput {
    detail::check_message(p, in);
    // The seen-message relation doubles as the store of known facts.
    detail::FloodContext ctx(s, [](detail::FloodContext&, const Fact&) {});
    if (in.kind == StepInput::Deliver) ctx.receive(*in.message);
    for (const auto& f : s.input)
      ctx.originate(Fact(t->fact_msg.at(f.rel), f.args));

    Instance known = s.input;
    for (const auto& [msg_rel, rel] : t->msg_to_rel)
      for (const auto& f : ctx.mem.with_rel(detail::seen_rel(msg_rel)))
        known.insert(Fact(rel, f.args));
    return detail::finish(s, ctx, t->q(known));
  };
  return p;
}

// ---------------------------------------------------------------------------
// t_adom: broadcast facts, constants, and oracle-certified negatives;
// evaluate once every fact over the known constants is resolved.

inline Protocol make_t_adom(const Query& q) {
  detail::check_protocol_safe_schema(q.input_schema());
  detail::check_protocol_safe_schema(q.output_schema());

  struct Tables {
    Query q;
    Schema edb;
    RelSymbol adom_msg{"m__adom", 1};
    RelSymbol adom_mem{"adom__", 1};
    std::map<RelSymbol, RelSymbol> fact_msg, neg_msg;  // R -> message rels
    std::map<RelSymbol, RelSymbol> pos_mem, neg_mem;   // R -> memory rels
    std::map<RelSymbol, std::pair<char, RelSymbol>> payload_kind;  // msg -> kind, R
  };
  auto t = std::make_shared<Tables>();
  t->q = q;
  t->edb = q.input_schema();

  Protocol p;
  p.name = "t_adom";
  p.edb = q.input_schema();
  p.message_schema.add(t->adom_msg);
  p.memory_schema.add(detail::seen_rel(t->adom_msg));
  p.memory_schema.add(t->adom_mem);
  t->payload_kind[t->adom_msg] = {'a', t->adom_msg};
  for (const auto& r : t->edb.relations()) {
    RelSymbol fm{"m__fact_" + r.name, r.arity}, nm{"m__neg_" + r.name, r.arity};
    RelSymbol pm{"pos__" + r.name, r.arity}, gm{"neg__" + r.name, r.arity};
    t->fact_msg[r] = fm;
    t->neg_msg[r] = nm;
    t->pos_mem[r] = pm;
    t->neg_mem[r] = gm;
    t->payload_kind[fm] = {'f', r};
    t->payload_kind[nm] = {'n', r};
    p.message_schema.add(fm);
    p.message_schema.add(nm);
    p.memory_schema.add(detail::seen_rel(fm));
    p.memory_schema.add(detail::seen_rel(nm));
    p.memory_schema.add(pm);
    p.memory_schema.add(gm);
  }

  p.init = [t](const Instance& input) {
    Instance mem;
    for (const auto& c : adom(input)) mem.insert(Fact(t->adom_mem, {c}));
    return mem;
  };

  p.step = [t, p](const TransducerState& s, const StepInput& in) -> StepOutput {
    detail::check_message(p, in);
    auto payload = [t](detail::FloodContext& ctx, const Fact& msg) {
      auto [kind, rel] = t->payload_kind.at(msg.rel);
      switch (kind) {
        case 'a':
          ctx.mem.insert(Fact(t->adom_mem, msg.args));
          break;
        case 'f':
          ctx.mem.insert(Fact(t->pos_mem.at(rel), msg.args));
          for (const auto& c : msg.args) ctx.mem.insert(Fact(t->adom_mem, {c}));
          break;
        case 'n':
          ctx.mem.insert(Fact(t->neg_mem.at(rel), msg.args));
          for (const auto& c : msg.args) ctx.mem.insert(Fact(t->adom_mem, {c}));
          break;
      }
    };
    detail::FloodContext ctx(s, payload);
    if (in.kind == StepInput::Deliver) ctx.receive(*in.message);

    // broadcast own input facts
    for (const auto& f : s.input) ctx.originate(Fact(t->fact_msg.at(f.rel), f.args));

    // broadcast every constant of every known-present fact
    Instance known_pos;
    for (const auto& [r, pm] : t->pos_mem)
      for (const auto& f : ctx.mem.with_rel(pm)) known_pos.insert(Fact(r, f.args));
    for (const auto& c : adom(known_pos)) ctx.originate(Fact(t->adom_msg, {c}));

    auto known_constants = detail::constants_of(ctx.mem.with_rel(t->adom_mem));

    // certify negatives: constructible facts the policy would place here
    // that are absent from the local input
    Instance slice = herbrand_slice(t->edb, known_constants, /*include_nullary=*/true);
    for (const auto& f : slice) {
      if (ctx.mem.contains(Fact(t->pos_mem.at(f.rel), f.args))) continue;
      if (ctx.mem.contains(Fact(t->neg_mem.at(f.rel), f.args))) continue;
      if (s.system.placed_here(f, known_constants))
        ctx.originate(Fact(t->neg_msg.at(f.rel), f.args));
    }

    // ready: every fact over the known constants is resolved
    bool ready = true;
    for (const auto& f : slice) {
      if (!ctx.mem.contains(Fact(t->pos_mem.at(f.rel), f.args)) &&
          !ctx.mem.contains(Fact(t->neg_mem.at(f.rel), f.args))) {
        ready = false;
        break;
      }
    }
    Instance result;
    if (ready) {
      known_pos.clear();
      for (const auto& [r, pm] : t->pos_mem)
        for (const auto& f : ctx.mem.with_rel(pm)) known_pos.insert(Fact(r, f.args));
      result = t->q(known_pos);
    }
    return detail::finish(s, ctx, result);
  };
  return p;
}

// ---------------------------------------------------------------------------
// t_repl: broadcast with per-fact acknowledgements. An owner of constant a
// holds, by the compatible placement, every input fact containing a; once a
// peer has acknowledged every held fact with a in column i of R, the owner
// certifies completeness of (R, i, a) to that peer. A node evaluates when
// every known constant is either owned or fully certified and all nullary
// relations have a broadcast status.

inline Protocol make_t_repl(const Query& q) {
  detail::check_protocol_safe_schema(q.input_schema());
  detail::check_protocol_safe_schema(q.output_schema());

  struct Tables {
    Query q;
    Schema edb;
    RelSymbol adom_msg{"m__adom", 1};
    RelSymbol comp_msg{"m__comp", 4};  // (relation, column, constant, target)
    RelSymbol adom_mem{"adom__", 1};
    RelSymbol own_mem{"own__", 1};
    RelSymbol notown_mem{"notown__", 1};
    RelSymbol comp_mem{"comp__", 3};  // (relation, column, constant)
    std::map<RelSymbol, RelSymbol> fact_msg, ack_msg, nstat_msg;  // per edb relation
    std::map<RelSymbol, RelSymbol> pos_mem, acked_mem, nstat_mem;
    std::map<RelSymbol, std::pair<char, RelSymbol>> payload_kind;
    std::map<std::string, RelSymbol> by_name;  // edb relation by name constant
  };
  auto t = std::make_shared<Tables>();
  t->q = q;
  t->edb = q.input_schema();

  Protocol p;
  p.name = "t_repl";
  p.edb = q.input_schema();
  p.message_schema.add(t->adom_msg);
  p.message_schema.add(t->comp_msg);
  p.memory_schema.add(detail::seen_rel(t->adom_msg));
  p.memory_schema.add(detail::seen_rel(t->comp_msg));
  p.memory_schema.add(t->adom_mem);
  p.memory_schema.add(t->own_mem);
  p.memory_schema.add(t->notown_mem);
  p.memory_schema.add(t->comp_mem);
  t->payload_kind[t->adom_msg] = {'a', t->adom_msg};
  t->payload_kind[t->comp_msg] = {'c', t->comp_msg};
  for (const auto& r : t->edb.relations()) {
    t->by_name[r.name] = r;
    RelSymbol fm{"m__fact_" + r.name, r.arity + 1};  // + origin
    RelSymbol pm{"pos__" + r.name, r.arity};
    t->fact_msg[r] = fm;
    t->pos_mem[r] = pm;
    t->payload_kind[fm] = {'f', r};
    p.message_schema.add(fm);
    p.memory_schema.add(detail::seen_rel(fm));
    p.memory_schema.add(pm);
    if (r.arity >= 1) {
      RelSymbol am{"m__ack_" + r.name, r.arity + 1};  // + acker
      RelSymbol km{"acked__" + r.name, r.arity + 1};
      t->ack_msg[r] = am;
      t->acked_mem[r] = km;
      t->payload_kind[am] = {'k', r};
      p.message_schema.add(am);
      p.memory_schema.add(detail::seen_rel(am));
      p.memory_schema.add(km);
    } else {
      RelSymbol sm{"m__nstat_" + r.name, 1};
      RelSymbol nm{"nstat__" + r.name, 1};
      t->nstat_msg[r] = sm;
      t->nstat_mem[r] = nm;
      t->payload_kind[sm] = {'s', r};
      p.message_schema.add(sm);
      p.memory_schema.add(detail::seen_rel(sm));
      p.memory_schema.add(nm);
    }
  }

  p.init = [t](const Instance& input) {
    Instance mem;
    for (const auto& c : adom(input)) mem.insert(Fact(t->adom_mem, {c}));
    return mem;
  };

  p.step = [t, p](const TransducerState& s, const StepInput& in) -> StepOutput {
    const Constant self_const = detail::node_constant(s.system.self);
    auto payload = [t, &self_const](detail::FloodContext& ctx, const Fact& msg) {
      auto [kind, rel] = t->payload_kind.at(msg.rel);
      auto note_constants = [&](auto begin, auto end) {
        for (auto it = begin; it != end; ++it) ctx.mem.insert(Fact(t->adom_mem, {*it}));
      };
      switch (kind) {
        case 'a':
          ctx.mem.insert(Fact(t->adom_mem, msg.args));
          break;
        case 'f': {  // (args..., origin)
          std::vector<Constant> args(msg.args.begin(), msg.args.end() - 1);
          note_constants(args.begin(), args.end());
          ctx.mem.insert(Fact(t->pos_mem.at(rel), std::move(args)));
          break;
        }
        case 'k':  // (args..., acker)
          note_constants(msg.args.begin(), msg.args.end() - 1);
          ctx.mem.insert(Fact(t->acked_mem.at(rel), msg.args));
          break;
        case 'c':  // (relation, column, constant, target)
          ctx.mem.insert(Fact(t->adom_mem, {msg.args[2]}));
          if (msg.args[3] == self_const)
            ctx.mem.insert(Fact(t->comp_mem, {msg.args[0], msg.args[1], msg.args[2]}));
          break;
        case 's':  // (present|absent)
          ctx.mem.insert(Fact(t->nstat_mem.at(rel), msg.args));
          if (msg.args[0] == detail::kPresent) ctx.mem.insert(Fact(t->pos_mem.at(rel), {}));
          break;
      }
    };
    detail::check_message(p, in);
    detail::FloodContext ctx(s, payload);
    if (in.kind == StepInput::Deliver) ctx.receive(*in.message);

    // broadcast own input facts, tagged with their origin
    for (const auto& f : s.input) {
      std::vector<Constant> args = f.args;
      args.push_back(self_const);
      ctx.originate(Fact(t->fact_msg.at(f.rel), std::move(args)));
    }

    // broadcast the constants of every known fact
    Instance known_pos;
    for (const auto& [r, pm] : t->pos_mem)
      for (const auto& f : ctx.mem.with_rel(pm)) known_pos.insert(Fact(r, f.args));
    for (const auto& c : adom(known_pos)) ctx.originate(Fact(t->adom_msg, {c}));

    auto known_constants = detail::constants_of(ctx.mem.with_rel(t->adom_mem));

    // resolve ownership for newly known constants via the self-oracle
    for (const auto& c : known_constants) {
      if (ctx.mem.contains(Fact(t->own_mem, {c})) || ctx.mem.contains(Fact(t->notown_mem, {c})))
        continue;
      auto probe = owner_probe_fact(t->edb, c);
      if (!probe) continue;
      bool mine = s.system.placed_here(*probe, known_constants);
      ctx.mem.insert(Fact(mine ? t->own_mem : t->notown_mem, {c}));
    }

    // acknowledge every known fact
    for (const auto& f : known_pos) {
      if (f.args.empty()) continue;
      std::vector<Constant> args = f.args;
      args.push_back(self_const);
      ctx.originate(Fact(t->ack_msg.at(f.rel), std::move(args)));
    }

    // the nullary home broadcasts a status per nullary relation
    for (const auto& r : t->edb.relations()) {
      if (r.arity != 0) continue;
      if (s.system.placed_here(Fact(r, {}), known_constants)) {
        bool present = s.input.count(Fact(r, {})) > 0;
        ctx.originate(Fact(t->nstat_msg.at(r), {present ? detail::kPresent : detail::kAbsent}));
      }
    }

    // owner-side completeness: targets are this node plus every peer seen in
    // an acknowledgement, so certificates never depend on the network size
    std::set<Constant> ackers{self_const};
    for (const auto& [r, km] : t->acked_mem)
      for (const auto& f : ctx.mem.with_rel(km)) ackers.insert(f.args.back());
    for (const auto& cfact : ctx.mem.with_rel(t->own_mem)) {
      const Constant& c = cfact.args[0];
      for (const auto& r : t->edb.relations()) {
        if (r.arity == 0) continue;
        for (int i = 1; i <= r.arity; ++i) {
          std::vector<Fact> held;
          for (const auto& f : s.input)
            if (f.rel == r && f.args[static_cast<size_t>(i - 1)] == c) held.push_back(f);
          for (const auto& target : ackers) {
            bool all_acked = true;
            for (const auto& f : held) {
              std::vector<Constant> args = f.args;
              args.push_back(target);
              if (!ctx.mem.contains(Fact(t->acked_mem.at(r), std::move(args)))) {
                all_acked = false;
                break;
              }
            }
            if (all_acked)
              ctx.originate(Fact(t->comp_msg,
                                 {Constant(r.name), detail::column_constant(i), c, target}));
          }
        }
      }
    }

    // ready: every known constant owned or certified for every column, and
    // every nullary relation resolved
    bool ready = true;
    for (const auto& c : known_constants) {
      if (ctx.mem.contains(Fact(t->own_mem, {c}))) continue;
      for (const auto& r : t->edb.relations()) {
        if (r.arity == 0) continue;
        for (int i = 1; i <= r.arity && ready; ++i)
          if (!ctx.mem.contains(
                  Fact(t->comp_mem, {Constant(r.name), detail::column_constant(i), c})))
            ready = false;
        if (!ready) break;
      }
      if (!ready) break;
    }
    for (const auto& r : t->edb.relations()) {
      if (r.arity != 0 || !ready) continue;
      if (!ctx.mem.contains(Fact(t->nstat_mem.at(r), {detail::kPresent})) &&
          !ctx.mem.contains(Fact(t->nstat_mem.at(r), {detail::kAbsent})))
        ready = false;
    }

    Instance result;
    if (ready) {
      known_pos.clear();
      for (const auto& [r, pm] : t->pos_mem)
        for (const auto& f : ctx.mem.with_rel(pm)) known_pos.insert(Fact(r, f.args));
      result = t->q(known_pos);
    }
    return detail::finish(s, ctx, result);
  };
  return p;
}

inline Protocol make_protocol(const std::string& name, const Query& q) {
  if (name == "t_mono") return make_t_mono(q);
  if (name == "t_adom") return make_t_adom(q);
  if (name == "t_repl") return make_t_repl(q);
  throw ValidationError("unknown protocol " + name + " (expected t_mono, t_adom, or t_repl)");
}

}  // namespace cfree
