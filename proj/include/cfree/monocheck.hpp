#pragma once

/// Brute-force decision procedures, over bounded instance spaces, for the
/// monotonicity classes: plain monotonicity, monotonicity under additions
/// carrying at least one new constant, and monotonicity under additions
/// carrying only new constants (single-fact and instance forms). Refutations
/// are sound and come with replayable, shrunk counterexamples; "holds"
/// verdicts are evidence within the searched bounds only.

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfree/datalog.hpp"
#include "cfree/relcore.hpp"

namespace cfree {

/// Finitizes the universally quantified definitions: instances over
/// domain_size canonical constants with at most max_facts facts; additions
/// may draw on extra_fresh reserved constants outside the instance space.
struct Bounds {
  int domain_size = 3;
  int max_facts = 3;
  int extra_fresh = 1;
};

inline std::string to_string(const Bounds& b) {
  return std::to_string(b.domain_size) + "," + std::to_string(b.max_facts) + "," +
         std::to_string(b.extra_fresh);
}

enum class QueryClass { Monotone, AdomMonotone, WeakAdomMonotone, WeakAdomInstance };

inline const char* to_string(QueryClass c) {
  switch (c) {
    case QueryClass::Monotone: return "monotone";
    case QueryClass::AdomMonotone: return "adom-monotone";
    case QueryClass::WeakAdomMonotone: return "weak-adom-monotone";
    case QueryClass::WeakAdomInstance: return "weak-adom-instance";
  }
  return "?";
}

/// A replayable refutation: lost_witness is in Q(base) but not in
/// Q(base + addition), and the addition satisfies the side condition of the
/// class being refuted.
struct Counterexample {
  Instance base;
  Instance addition;
  Fact lost_witness;
};

struct ClassVerdict {
  QueryClass checked;
  bool holds = true;  // within bounds
  std::optional<Counterexample> refutation;
  Bounds bounds;
};

// ---------------------------------------------------------------------------
// Side-condition validators. A counterexample for a weaker class must be
// accepted by every stronger class's validator.

inline bool violation_holds(const Query& q, const Counterexample& cx) {
  Instance extended = cx.base;
  extended.insert(cx.addition.begin(), cx.addition.end());
  Instance before = q(cx.base);
  Instance after = q(extended);
  return before.count(cx.lost_witness) > 0 && after.count(cx.lost_witness) == 0;
}

inline bool validate_monotone_cx(const Query& q, const Counterexample& cx) {
  return !cx.addition.empty() && violation_holds(q, cx);
}

inline bool validate_adom_cx(const Query& q, const Counterexample& cx) {
  auto dom = adom(cx.base);
  for (const auto& f : cx.addition) {
    bool has_new = false;
    for (const auto& c : f.args)
      if (!dom.count(c)) has_new = true;
    if (!has_new) return false;  // nullary facts can never carry a new constant
  }
  return validate_monotone_cx(q, cx);
}

inline bool validate_weak_adom_cx(const Query& q, const Counterexample& cx) {
  auto dom = adom(cx.base);
  for (const auto& f : cx.addition) {
    if (f.args.empty()) return false;
    for (const auto& c : f.args)
      if (dom.count(c)) return false;
  }
  return validate_monotone_cx(q, cx);
}

inline bool validate_cx(const Query& q, QueryClass cls, const Counterexample& cx) {
  switch (cls) {
    case QueryClass::Monotone: return validate_monotone_cx(q, cx);
    case QueryClass::AdomMonotone: return validate_adom_cx(q, cx);
    case QueryClass::WeakAdomMonotone:
      return cx.addition.size() == 1 && validate_weak_adom_cx(q, cx);
    case QueryClass::WeakAdomInstance: return validate_weak_adom_cx(q, cx);
  }
  return false;
}

/// Greedily drops base facts while the violation (and the side condition)
/// persists. Keeps counterexamples minimal and stable for golden tests.
inline Counterexample shrink_counterexample(const Query& q, QueryClass cls, Counterexample cx) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& f : cx.base) {
      Counterexample smaller = cx;
      smaller.base.erase(f);
      if (validate_cx(q, cls, smaller)) {
        // the witness may differ on the smaller base; recompute the first one
        Instance extended = smaller.base;
        extended.insert(smaller.addition.begin(), smaller.addition.end());
        Instance before = q(smaller.base);
        Instance after = q(extended);
        for (const auto& w : before)
          if (!after.count(w)) {
            smaller.lost_witness = w;
            break;
          }
        cx = std::move(smaller);
        changed = true;
        break;
      }
    }
  }
  return cx;
}

namespace detail {

inline std::optional<Fact> first_lost_fact(const Query& q, const Instance& base,
                                           const Instance& addition) {
  Instance before = q(base);
  if (before.empty()) return std::nullopt;
  Instance extended = base;
  extended.insert(addition.begin(), addition.end());
  Instance after = q(extended);
  for (const auto& w : before)
    if (!after.count(w)) return w;
  return std::nullopt;
}

/// Shared search loop: enumerate bases smallest-first; for each base, ask
/// `additions` for the ordered candidate additions; refute on the first lost
/// output fact.
inline ClassVerdict search(const Query& q, QueryClass cls, const Bounds& b,
                           const std::function<std::vector<Instance>(const Instance&)>& additions) {
  ClassVerdict verdict{cls, true, std::nullopt, b};
  auto en = enumerate_instances(q.input_schema(), b.domain_size, b.max_facts);
  while (auto base = en.next()) {
    Instance before = q(*base);
    if (before.empty()) continue;  // nothing can be lost
    for (const auto& add : additions(*base)) {
      if (auto w = first_lost_fact(q, *base, add)) {
        Counterexample cx{*base, add, *w};
        verdict.holds = false;
        verdict.refutation = shrink_counterexample(q, cls, std::move(cx));
        return verdict;
      }
    }
  }
  return verdict;
}

inline std::vector<Instance> single_fact_additions(const Schema& schema, const Instance& base,
                                                   int extra_fresh, QueryClass cls) {
  auto base_dom = adom(base);
  auto fresh = fresh_constants(base_dom, extra_fresh);
  std::set<Constant> pool;
  if (cls != QueryClass::WeakAdomMonotone) pool = base_dom;
  pool.insert(fresh.begin(), fresh.end());

  std::vector<Instance> out;
  for (const auto& f : herbrand_slice(schema, pool, /*include_nullary=*/true)) {
    if (base.count(f)) continue;  // adding a present fact changes nothing
    bool some_new = false, all_new = !f.args.empty();
    for (const auto& c : f.args) {
      if (base_dom.count(c))
        all_new = false;
      else
        some_new = true;
    }
    switch (cls) {
      case QueryClass::Monotone: break;
      case QueryClass::AdomMonotone:
        if (!some_new) continue;
        break;
      case QueryClass::WeakAdomMonotone:
      case QueryClass::WeakAdomInstance:
        if (!all_new) continue;
        break;
    }
    out.push_back(Instance{f});
  }
  return out;
}

}  // namespace detail

/// Plain monotonicity: additions are arbitrary single facts over
/// adom(base) plus fresh constants (the single-fact form suffices — losing
/// output under a multi-fact addition implies losing it under one of its
/// facts along the chain).
inline ClassVerdict check_monotone(const Query& q, const Bounds& b) {
  return detail::search(q, QueryClass::Monotone, b, [&](const Instance& base) {
    return detail::single_fact_additions(q.input_schema(), base, b.extra_fresh,
                                         QueryClass::Monotone);
  });
}

/// Additions restricted to facts carrying at least one constant outside
/// adom(base).
inline ClassVerdict check_adom_monotone(const Query& q, const Bounds& b) {
  return detail::search(q, QueryClass::AdomMonotone, b, [&](const Instance& base) {
    return detail::single_fact_additions(q.input_schema(), base, b.extra_fresh,
                                         QueryClass::AdomMonotone);
  });
}

/// Additions restricted to non-nullary facts all of whose constants are
/// outside adom(base); repeated fresh constants and self-loops included.
inline ClassVerdict check_weak_adom_monotone(const Query& q, const Bounds& b) {
  return detail::search(q, QueryClass::WeakAdomMonotone, b, [&](const Instance& base) {
    return detail::single_fact_additions(q.input_schema(), base, b.extra_fresh,
                                         QueryClass::WeakAdomMonotone);
  });
}

/// Instance form: additions are whole instances over fresh constants,
/// nullary-free, with active domain disjoint from the base.
inline ClassVerdict check_weak_adom_instance(const Query& q, const Bounds& b) {
  return detail::search(q, QueryClass::WeakAdomInstance, b, [&](const Instance& base) {
    auto fresh = fresh_constants(adom(base), b.extra_fresh);
    Instance universe = herbrand_slice(
        q.input_schema(), std::set<Constant>(fresh.begin(), fresh.end()), /*include_nullary=*/false);
    std::vector<Instance> out;
    InstanceEnumerator en(universe, b.max_facts);
    while (auto add = en.next()) {
      if (!add->empty()) out.push_back(std::move(*add));
    }
    return out;
  });
}

/// The four verdicts in hierarchy order, plus consistency checks: a class
/// that holds within bounds forbids refuting any class whose search space it
/// contains. The single-fact and instance forms of the weakest class are
/// kept separate; a divergence between them is reported, not suppressed.
struct ClassReport {
  ClassVerdict monotone;
  ClassVerdict adom;
  ClassVerdict weak_adom;
  ClassVerdict weak_instance;
  bool single_vs_instance_divergence = false;

  std::vector<const ClassVerdict*> in_order() const {
    return {&monotone, &adom, &weak_adom, &weak_instance};
  }
};

inline ClassReport classify_query(const Query& q, const Bounds& b) {
  ClassReport r{check_monotone(q, b), check_adom_monotone(q, b), check_weak_adom_monotone(q, b),
                check_weak_adom_instance(q, b)};
  // search-space containment: monotone >= adom >= weak-adom (single-fact)
  if (r.monotone.holds && (!r.adom.holds || !r.weak_adom.holds))
    throw Error("checker inconsistency: monotone holds but a restricted class was refuted");
  if (r.adom.holds && !r.weak_adom.holds)
    throw Error("checker inconsistency: adom-monotone holds but the weak form was refuted");
  r.single_vs_instance_divergence = r.weak_adom.holds != r.weak_instance.holds;
  return r;
}

// ---------------------------------------------------------------------------
// Line-oriented report serialization:
//   class=<name> result=holds|refuted bounds=d,f,x
// followed by base/addition/witness blocks in the fact text format.

inline std::string print_verdict(const ClassVerdict& v) {
  std::ostringstream out;
  out << "class=" << to_string(v.checked) << " result=" << (v.holds ? "holds" : "refuted")
      << " bounds=" << to_string(v.bounds) << "\n";
  if (v.refutation) {
    out << "base:\n" << print_instance(v.refutation->base);
    out << "addition:\n" << print_instance(v.refutation->addition);
    out << "witness:\n" << print_fact(v.refutation->lost_witness) << "\n";
  }
  return out.str();
}

inline std::string print_report(const ClassReport& r) {
  std::string out;
  for (const auto* v : r.in_order()) out += print_verdict(*v);
  if (r.single_vs_instance_divergence)
    out += "note: single-fact and instance forms diverge within these bounds\n";
  return out;
}

/// Renames constants to r1, r2, ... in order of first occurrence across the
/// base, addition, and witness. Two counterexamples are equivalent up to
/// renaming iff their canonical forms are equal.
inline Counterexample canonical_renaming(const Counterexample& cx) {
  std::map<Constant, Constant> renaming;
  auto rename = [&](const Constant& c) {
    auto it = renaming.find(c);
    if (it == renaming.end())
      it = renaming.emplace(c, Constant("r" + std::to_string(renaming.size() + 1))).first;
    return it->second;
  };
  auto rename_fact = [&](const Fact& f) {
    std::vector<Constant> args;
    for (const auto& c : f.args) args.push_back(rename(c));
    return Fact(f.rel, std::move(args));
  };
  // base facts drive the numbering, then the addition, then the witness
  Counterexample out{{}, {}, cx.lost_witness};
  for (const auto& f : cx.base) out.base.insert(rename_fact(f));
  for (const auto& f : cx.addition) out.addition.insert(rename_fact(f));
  out.lost_witness = rename_fact(cx.lost_witness);
  return out;
}

inline bool equivalent_up_to_renaming(const Counterexample& a, const Counterexample& b) {
  auto ca = canonical_renaming(a);
  auto cb = canonical_renaming(b);
  return ca.base == cb.base && ca.addition == cb.addition && ca.lost_witness == cb.lost_witness;
}

}  // namespace cfree
