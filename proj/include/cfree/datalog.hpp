#pragma once

/// Datalog with negation: parsing, classification (positive / semi-positive /
/// stratified), stratified semi-naive evaluation, the active-domain
/// complement transform, and the win-move game evaluator.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cfree/relcore.hpp"

namespace cfree {

/// A term is a variable (uppercase in text form) or a constant (lowercase).
struct Term {
  enum Kind { Variable, ConstantTerm } kind;
  std::string name;

  static Term var(std::string n) { return Term{Variable, std::move(n)}; }
  static Term constant(std::string n) { return Term{ConstantTerm, std::move(n)}; }

  bool operator==(const Term& o) const = default;
  auto operator<=>(const Term& o) const = default;
};

struct Atom {
  RelSymbol rel;
  std::vector<Term> args;

  bool operator==(const Atom& o) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  bool operator==(const Literal& o) const = default;
};

struct Rule {
  Atom head;
  std::vector<Literal> body;

  bool operator==(const Rule& o) const = default;
};

enum class ProgramClass { Positive, SemiPositive, Stratified, NonStratified };

inline const char* to_string(ProgramClass c) {
  switch (c) {
    case ProgramClass::Positive: return "positive";
    case ProgramClass::SemiPositive: return "semi-positive";
    case ProgramClass::Stratified: return "stratified";
    case ProgramClass::NonStratified: return "non-stratified";
  }
  return "?";
}

/// A Datalog program. edb relations are those never appearing in a rule head;
/// idb relations are the derived ones; outputs is a subset of idb.
struct Program {
  std::vector<Rule> rules;
  Schema edb;
  Schema idb;
  Schema outputs;
};

namespace detail {

inline std::set<std::string> rule_head_and_negated_vars(const Rule& r) {
  std::set<std::string> need;
  for (const auto& t : r.head.args)
    if (t.kind == Term::Variable) need.insert(t.name);
  for (const auto& l : r.body)
    if (l.negated)
      for (const auto& t : l.atom.args)
        if (t.kind == Term::Variable) need.insert(t.name);
  return need;
}

inline std::set<std::string> rule_positive_vars(const Rule& r) {
  std::set<std::string> have;
  for (const auto& l : r.body)
    if (!l.negated)
      for (const auto& t : l.atom.args)
        if (t.kind == Term::Variable) have.insert(t.name);
  return have;
}

}  // namespace detail

/// Every variable in the head or in a negated literal must occur in some
/// positive body literal.
inline void check_range_restricted(const Rule& r) {
  auto need = detail::rule_head_and_negated_vars(r);
  auto have = detail::rule_positive_vars(r);
  for (const auto& v : need)
    if (!have.count(v))
      throw ValidationError("rule for " + r.head.rel.name + " is not range-restricted: variable " +
                            v + " does not occur in a positive body literal");
}

/// Validates the structural invariants of a program built programmatically.
inline void validate_program(const Program& p) {
  for (const auto& r : p.idb.relations())
    if (p.edb.find(r.name))
      throw ValidationError("relation " + r.name + " is both edb and idb");
  for (const auto& rule : p.rules) {
    if (p.edb.find(rule.head.rel.name))
      throw ValidationError("rule head " + rule.head.rel.name + " is an edb relation");
    if (!p.idb.contains(rule.head.rel))
      throw ValidationError("rule head " + rule.head.rel.name + " is not a declared idb relation");
    check_range_restricted(rule);
  }
  for (const auto& r : p.outputs.relations())
    if (!p.idb.contains(r))
      throw ValidationError("output relation " + r.name + " is not derived by any rule");
}

/// Parses the rule grammar:
///   program := { rule | "@output" ident "." }
///   rule    := atom ( ":-" body )? "."
///   body    := literal { "," literal }
///   literal := [ "not" ] atom
///   atom    := ident "(" [ term { "," term } ] ")"
/// Variables start uppercase, constants lowercase; `%` starts a comment.
inline Program parse_program(std::string_view text) {
  detail::Cursor cur(text);
  std::vector<Rule> rules;
  std::vector<std::pair<std::string, std::pair<int, int>>> output_names;  // name, position
  std::map<std::string, std::pair<int, std::pair<int, int>>> arities;     // name -> arity, first use

  auto parse_atom = [&]() -> Atom {
    int line = cur.line(), col = cur.col();
    std::string name = cur.ident();
    cur.expect('(', "after relation name");
    std::vector<Term> args;
    if (!cur.accept(')')) {
      do {
        cur.skip_ws_and_comments();
        std::string t = cur.ident(/*allow_upper=*/true);
        args.push_back(detail::is_upper_start(t[0]) ? Term::var(t) : Term::constant(t));
      } while (cur.accept(','));
      cur.expect(')', "to close the argument list");
    }
    int arity = static_cast<int>(args.size());
    auto [it, fresh] = arities.emplace(name, std::make_pair(arity, std::make_pair(line, col)));
    if (!fresh && it->second.first != arity)
      throw ParseError("relation " + name + " used with arities " +
                           std::to_string(it->second.first) + " and " + std::to_string(arity),
                       line, col);
    return Atom{RelSymbol{name, arity}, std::move(args)};
  };

  while (!cur.eof()) {
    if (cur.accept('@')) {
      int line = cur.line(), col = cur.col();
      std::string kw = cur.ident();
      if (kw != "output") throw ParseError("unknown directive @" + kw, line, col);
      std::string rel = cur.ident();
      cur.expect('.', "after the @output directive");
      output_names.emplace_back(rel, std::make_pair(line, col));
      continue;
    }
    Rule r;
    r.head = parse_atom();
    if (cur.accept(':')) {
      cur.expect('-', "in ':-'");
      do {
        cur.skip_ws_and_comments();
        Literal lit;
        if (detail::is_ident_start(cur.peek())) {
          int line = cur.line(), col = cur.col();
          // lookahead for the 'not' keyword
          std::string word = cur.ident();
          if (word == "not") {
            lit.negated = true;
            lit.atom = parse_atom();
          } else {
            // re-assemble: `word` was the relation name
            cur.expect('(', "after relation name");
            std::vector<Term> args;
            if (!cur.accept(')')) {
              do {
                cur.skip_ws_and_comments();
                std::string t = cur.ident(true);
                args.push_back(detail::is_upper_start(t[0]) ? Term::var(t) : Term::constant(t));
              } while (cur.accept(','));
              cur.expect(')', "to close the argument list");
            }
            int arity = static_cast<int>(args.size());
            auto [it, fresh] =
                arities.emplace(word, std::make_pair(arity, std::make_pair(line, col)));
            if (!fresh && it->second.first != arity)
              throw ParseError("relation " + word + " used with arities " +
                                   std::to_string(it->second.first) + " and " +
                                   std::to_string(arity),
                               line, col);
            lit.atom = Atom{RelSymbol{word, arity}, std::move(args)};
          }
        } else {
          cur.fail("expected a body literal");
        }
        r.body.push_back(std::move(lit));
      } while (cur.accept(','));
    }
    cur.expect('.', "after the rule");
    check_range_restricted(r);
    rules.push_back(std::move(r));
  }

  Program p;
  p.rules = std::move(rules);
  std::set<std::string> head_names;
  for (const auto& r : p.rules) head_names.insert(r.head.rel.name);
  for (const auto& [name, use] : arities) {
    RelSymbol rel{name, use.first};
    if (head_names.count(name))
      p.idb.add(rel);
    else
      p.edb.add(rel);
  }
  for (const auto& [name, pos] : output_names) {
    auto rel = p.idb.find(name);
    if (!rel)
      throw ParseError("@output " + name + " does not name a derived relation", pos.first,
                       pos.second);
    p.outputs.add(*rel);
  }
  validate_program(p);
  return p;
}

/// Strongest applicable class: positive if negation-free; semi-positive if
/// negation touches only edb relations; stratified if the precedence graph
/// has no cycle through negation.
inline ProgramClass classify_program(const Program& p) {
  bool any_negation = false;
  bool negation_on_idb = false;
  for (const auto& r : p.rules)
    for (const auto& l : r.body)
      if (l.negated) {
        any_negation = true;
        if (p.idb.contains(l.atom.rel)) negation_on_idb = true;
      }
  if (!any_negation) return ProgramClass::Positive;
  if (!negation_on_idb) return ProgramClass::SemiPositive;

  // precedence graph over relation names: body -> head, flagged when negated
  std::map<std::string, std::set<std::string>> succ;
  std::set<std::pair<std::string, std::string>> neg_edges;
  for (const auto& r : p.rules)
    for (const auto& l : r.body) {
      succ[l.atom.rel.name].insert(r.head.rel.name);
      if (l.negated) neg_edges.emplace(l.atom.rel.name, r.head.rel.name);
    }

  // Tarjan SCC
  std::map<std::string, int> index, low, comp;
  std::vector<std::string> stack;
  std::set<std::string> on_stack;
  int next_index = 0, next_comp = 0;
  std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : succ[v]) {
      if (!index.count(w)) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        std::string w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp[w] = next_comp;
        if (w == v) break;
      }
      ++next_comp;
    }
  };
  std::set<std::string> names;
  for (const auto& r : p.edb.relations()) names.insert(r.name);
  for (const auto& r : p.idb.relations()) names.insert(r.name);
  for (const auto& n : names)
    if (!index.count(n)) strongconnect(n);

  for (const auto& [from, to] : neg_edges)
    if (comp[from] == comp[to]) return ProgramClass::NonStratified;
  return ProgramClass::Stratified;
}

namespace detail {

// Strata as groups of idb relations, dependencies first. Requires a
// stratified program.
inline std::vector<std::set<RelSymbol>> stratify(const Program& p) {
  std::map<std::string, int> stratum;
  for (const auto& r : p.edb.relations()) stratum[r.name] = 0;
  for (const auto& r : p.idb.relations()) stratum[r.name] = 0;
  // fixpoint over: stratum(head) >= stratum(body), > for negated body
  bool changed = true;
  int limit = static_cast<int>(stratum.size()) + 2;
  while (changed) {
    changed = false;
    for (const auto& r : p.rules) {
      int& h = stratum[r.head.rel.name];
      for (const auto& l : r.body) {
        int b = stratum[l.atom.rel.name] + (l.negated ? 1 : 0);
        if (h < b) {
          h = b;
          changed = true;
          if (h > limit) throw ValidationError("program is not stratified");
        }
      }
    }
  }
  int max_stratum = 0;
  for (const auto& [_, s] : stratum) max_stratum = std::max(max_stratum, s);
  std::vector<std::set<RelSymbol>> out(static_cast<size_t>(max_stratum) + 1);
  for (const auto& r : p.idb.relations()) out[static_cast<size_t>(stratum[r.name])].insert(r);
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

/// Fact store indexed by relation for the join loops.
class FactStore {
 public:
  void insert(const Fact& f) { rels_[f.rel].insert(f.args); }
  bool contains(const Fact& f) const {
    auto it = rels_.find(f.rel);
    return it != rels_.end() && it->second.count(f.args);
  }
  const std::set<std::vector<Constant>>& tuples(const RelSymbol& r) const {
    static const std::set<std::vector<Constant>> empty;
    auto it = rels_.find(r);
    return it == rels_.end() ? empty : it->second;
  }
  Instance to_instance() const {
    Instance out;
    for (const auto& [rel, tuples] : rels_)
      for (const auto& t : tuples) out.insert(Fact(rel, t));
    return out;
  }

 private:
  std::map<RelSymbol, std::set<std::vector<Constant>>> rels_;
};

using Env = std::map<std::string, Constant>;

inline bool unify_args(const std::vector<Term>& pattern, const std::vector<Constant>& tuple,
                       Env& env) {
  for (size_t i = 0; i < pattern.size(); ++i) {
    const Term& t = pattern[i];
    if (t.kind == Term::ConstantTerm) {
      if (!(Constant(t.name) == tuple[i])) return false;
    } else {
      auto it = env.find(t.name);
      if (it == env.end())
        env.emplace(t.name, tuple[i]);
      else if (!(it->second == tuple[i]))
        return false;
    }
  }
  return true;
}

inline Fact substitute(const Atom& a, const Env& env) {
  std::vector<Constant> args;
  args.reserve(a.args.size());
  for (const auto& t : a.args) {
    if (t.kind == Term::ConstantTerm)
      args.emplace_back(t.name);
    else
      args.push_back(env.at(t.name));
  }
  return Fact(a.rel, std::move(args));
}

/// Joins the rule body against `db`, with the literal at `delta_pos` (when
/// >= 0) restricted to `delta`. Positive literals are matched before negated
/// ones; range restriction guarantees negated literals are ground by then.
inline void match_rule(const Rule& rule, const FactStore& db, const FactStore* delta,
                       int delta_pos, const std::function<void(const Fact&)>& emit) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(rule.body.size()); ++i)
    if (!rule.body[static_cast<size_t>(i)].negated) order.push_back(i);
  for (int i = 0; i < static_cast<int>(rule.body.size()); ++i)
    if (rule.body[static_cast<size_t>(i)].negated) order.push_back(i);

  std::function<void(size_t, Env&)> go = [&](size_t oi, Env& env) {
    if (oi == order.size()) {
      emit(substitute(rule.head, env));
      return;
    }
    const Literal& lit = rule.body[static_cast<size_t>(order[oi])];
    if (lit.negated) {
      Fact ground = substitute(lit.atom, env);
      if (!db.contains(ground)) go(oi + 1, env);
      return;
    }
    const auto& source =
        (order[oi] == delta_pos && delta) ? delta->tuples(lit.atom.rel) : db.tuples(lit.atom.rel);
    for (const auto& tuple : source) {
      Env env2 = env;
      if (unify_args(lit.atom.args, tuple, env2)) go(oi + 1, env2);
    }
  };
  Env env;
  go(0, env);
}

}  // namespace detail

/// Least-fixpoint evaluation, stratum by stratum, semi-naive within each
/// stratum. The result is restricted to the program's output relations.
/// Rejects non-stratified programs.
inline Instance eval(const Program& p, const Instance& I) {
  if (!instance_over(I, p.edb))
    throw ValidationError("input instance is not over the program's edb schema");
  if (classify_program(p) == ProgramClass::NonStratified)
    throw ValidationError("program is not stratified; evaluation is undefined");

  detail::FactStore db;
  for (const auto& f : I) db.insert(f);

  auto strata = detail::stratify(p);
  for (const auto& group : strata) {
    std::vector<const Rule*> rules;
    for (const auto& r : p.rules)
      if (group.count(r.head.rel)) rules.push_back(&r);
    if (rules.empty()) continue;

    // round 0: all rules over the current database
    detail::FactStore delta;
    for (const Rule* r : rules)
      detail::match_rule(*r, db, nullptr, -1, [&](const Fact& f) {
        if (!db.contains(f)) delta.insert(f);
      });
    Instance delta_facts = delta.to_instance();
    for (const auto& f : delta_facts) db.insert(f);

    // delta rounds: only rules with a recursive positive literal can fire
    while (!delta_facts.empty()) {
      detail::FactStore next;
      for (const Rule* r : rules) {
        for (int i = 0; i < static_cast<int>(r->body.size()); ++i) {
          const Literal& lit = r->body[static_cast<size_t>(i)];
          if (lit.negated || !group.count(lit.atom.rel)) continue;
          detail::match_rule(*r, db, &delta, i, [&](const Fact& f) {
            if (!db.contains(f)) next.insert(f);
          });
        }
      }
      delta_facts = next.to_instance();
      for (const auto& f : delta_facts) db.insert(f);
      delta = next;
    }
  }

  Instance all = db.to_instance();
  Instance out;
  for (const auto& f : all)
    if (p.outputs.contains(f.rel)) out.insert(f);
  return out;
}

// ---------------------------------------------------------------------------
// Active-domain complement (the semi-positive -> positive transform).

inline constexpr const char* kComplementSuffix = "__c";

namespace detail {

inline bool uses_reserved_suffix(const std::string& name) {
  std::string suffix = kComplementSuffix;
  return name.size() > suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline RelSymbol complement_rel(const RelSymbol& r) {
  return RelSymbol{r.name + kComplementSuffix, r.arity};
}

}  // namespace detail

/// For each relation R of `schema` with arity k, the facts R__c(a...) over
/// adom(I)^k that are absent from I. A nullary R contributes R__c() iff R()
/// is absent.
inline Instance complement(const Instance& I, const Schema& schema) {
  for (const auto& r : schema.relations())
    if (detail::uses_reserved_suffix(r.name))
      throw ValidationError("relation " + r.name + " already uses the reserved " +
                            kComplementSuffix + " suffix");
  Instance out;
  auto dom = adom(I);
  for (const auto& f : herbrand_slice(schema, dom, /*include_nullary=*/true)) {
    if (!I.count(f)) out.insert(Fact(detail::complement_rel(f.rel), f.args));
  }
  return out;
}

/// Replaces each negated edb literal `not R(t...)` by the positive literal
/// `R__c(t...)` and extends the edb schema with the complement relations.
/// Only positive and semi-positive programs are accepted.
inline Program positivize(const Program& p) {
  auto cls = classify_program(p);
  if (cls != ProgramClass::Positive && cls != ProgramClass::SemiPositive)
    throw ValidationError("positivize requires a positive or semi-positive program");
  for (const auto& r : p.edb.relations())
    if (detail::uses_reserved_suffix(r.name))
      throw ValidationError("relation " + r.name + " already uses the reserved " +
                            kComplementSuffix + " suffix");
  for (const auto& r : p.idb.relations())
    if (detail::uses_reserved_suffix(r.name))
      throw ValidationError("relation " + r.name + " already uses the reserved " +
                            kComplementSuffix + " suffix");

  Program out;
  out.edb = p.edb;
  out.idb = p.idb;
  out.outputs = p.outputs;
  for (const auto& r : p.edb.relations()) out.edb.add(detail::complement_rel(r));
  for (const auto& rule : p.rules) {
    Rule r2 = rule;
    for (auto& lit : r2.body) {
      if (lit.negated) {
        lit.negated = false;
        lit.atom.rel = detail::complement_rel(lit.atom.rel);
      }
    }
    out.rules.push_back(std::move(r2));
  }
  validate_program(out);
  return out;
}

// ---------------------------------------------------------------------------
// The win-move game, evaluated by the alternating fixpoint. A position is
// won iff some move reaches a lost position; lost iff every move reaches a
// won position. Positions in neither set are drawn and not output.

inline const RelSymbol kMoveRel{"move", 2};
inline const RelSymbol kWonRel{"won", 1};

inline Instance winmove(const Instance& I) {
  for (const auto& f : I)
    if (!(f.rel == kMoveRel))
      throw ValidationError("winmove input must be over move/2, got " + f.rel.name);
  std::map<Constant, std::set<Constant>> succ;
  std::set<Constant> positions = adom(I);
  for (const auto& f : I) succ[f.args[0]].insert(f.args[1]);

  std::set<Constant> won, lost;
  while (true) {
    std::set<Constant> new_lost;
    for (const auto& x : positions) {
      const auto& s = succ[x];
      if (std::all_of(s.begin(), s.end(), [&](const Constant& y) { return won.count(y) > 0; }))
        new_lost.insert(x);
    }
    std::set<Constant> new_won;
    for (const auto& x : positions) {
      const auto& s = succ[x];
      if (std::any_of(s.begin(), s.end(), [&](const Constant& y) { return new_lost.count(y) > 0; }))
        new_won.insert(x);
    }
    if (new_won == won && new_lost == lost) break;
    won = std::move(new_won);
    lost = std::move(new_lost);
  }

  Instance out;
  for (const auto& x : won) out.insert(Fact(kWonRel, {x}));
  return out;
}

// ---------------------------------------------------------------------------
// Queries: either a program with outputs or an opaque total evaluator.

/// A deterministic mapping between instances with declared input and output
/// schemas. Program-backed queries evaluate via `eval`; opaque queries carry
/// their own evaluator (used for win-move, whose program form is not
/// stratified).
class Query {
 public:
  static Query from_program(std::string name, Program p) {
    Query q;
    q.name_ = std::move(name);
    q.input_ = p.edb;
    q.output_ = p.outputs;
    q.program_ = std::move(p);
    return q;
  }

  static Query opaque(std::string name, Schema input, Schema output,
                      std::function<Instance(const Instance&)> fn) {
    Query q;
    q.name_ = std::move(name);
    q.input_ = std::move(input);
    q.output_ = std::move(output);
    q.fn_ = std::move(fn);
    return q;
  }

  const std::string& name() const { return name_; }
  const Schema& input_schema() const { return input_; }
  const Schema& output_schema() const { return output_; }
  const std::optional<Program>& program() const { return program_; }

  Instance operator()(const Instance& I) const {
    if (!instance_over(I, input_))
      throw ValidationError("query " + name_ + ": input instance does not match the input schema");
    return program_ ? eval(*program_, I) : fn_(I);
  }

 private:
  std::string name_;
  Schema input_;
  Schema output_;
  std::optional<Program> program_;
  std::function<Instance(const Instance&)> fn_;
};

/// Uniform dispatch; total and deterministic for well-formed inputs.
inline Instance eval_query(const Query& q, const Instance& I) { return q(I); }

}  // namespace cfree
