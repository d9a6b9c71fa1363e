#pragma once

/// Relational core: constants, schemas, facts, instances, active domains,
/// and bounded enumeration of the fact space over a finite constant set.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cfree {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input text could not be parsed; carries a 1-based position.
struct ParseError : Error {
  ParseError(std::string msg, int line, int col)
      : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct ValidationError : Error {
  using Error::Error;
};

namespace detail {

// One canonical string per distinct symbol; pointers are stable for the
// lifetime of the process.
inline const std::string* intern_symbol(std::string_view s) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<std::string>, std::less<>> pool;
  std::lock_guard<std::mutex> lock(mu);
  auto it = pool.find(s);
  if (it == pool.end()) {
    auto owned = std::make_unique<std::string>(s);
    it = pool.emplace(*owned, std::move(owned)).first;
  }
  return it->second.get();
}

inline bool is_ident_start(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_upper_start(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace detail

/// A domain constant. Equality is by symbol; ordering is lexicographic on the
/// canonical name so every enumeration and trace in the library is
/// reproducible. The pool is unbounded: fresh constants can always be minted.
class Constant {
 public:
  explicit Constant(std::string_view symbol) : sym_(detail::intern_symbol(symbol)) {}

  const std::string& symbol() const { return *sym_; }

  bool operator==(const Constant& o) const { return sym_ == o.sym_; }
  std::strong_ordering operator<=>(const Constant& o) const {
    if (sym_ == o.sym_) return std::strong_ordering::equal;
    return *sym_ <=> *o.sym_;
  }

 private:
  const std::string* sym_;
};

/// A relation symbol: a name plus a fixed arity. Arity 0 is permitted.
struct RelSymbol {
  std::string name;
  int arity = 0;

  bool operator==(const RelSymbol& o) const = default;
  auto operator<=>(const RelSymbol& o) const = default;
};

/// A ground atom.
struct Fact {
  RelSymbol rel;
  std::vector<Constant> args;

  Fact(RelSymbol r, std::vector<Constant> a) : rel(std::move(r)), args(std::move(a)) {
    if (static_cast<int>(args.size()) != rel.arity)
      throw ValidationError("fact " + rel.name + " has " + std::to_string(args.size()) +
                            " arguments, relation arity is " + std::to_string(rel.arity));
  }

  bool operator==(const Fact& o) const = default;
  auto operator<=>(const Fact& o) const = default;
};

/// A finite set of facts. Set semantics; iteration order is the canonical
/// fact order, so printing an instance is deterministic.
using Instance = std::set<Fact>;

/// A finite set of relation symbols with pairwise-distinct names.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<RelSymbol> rels) {
    for (auto& r : rels) add(std::move(r));
  }

  void add(RelSymbol r) {
    for (const auto& existing : rels_)
      if (existing.name == r.name && !(existing == r))
        throw ValidationError("relation " + r.name + " declared with conflicting arities " +
                              std::to_string(existing.arity) + " and " + std::to_string(r.arity));
    rels_.insert(std::move(r));
  }

  bool contains(const RelSymbol& r) const { return rels_.count(r) > 0; }
  std::optional<RelSymbol> find(std::string_view name) const {
    for (const auto& r : rels_)
      if (r.name == name) return r;
    return std::nullopt;
  }

  const std::set<RelSymbol>& relations() const { return rels_; }
  bool empty() const { return rels_.empty(); }

  bool operator==(const Schema& o) const = default;

 private:
  std::set<RelSymbol> rels_;
};

inline Schema schema_union(const Schema& a, const Schema& b) {
  Schema out = a;
  for (const auto& r : b.relations()) out.add(r);
  return out;
}

/// True iff every fact of `I` uses a relation of `schema` (name and arity).
inline bool instance_over(const Instance& I, const Schema& schema) {
  return std::all_of(I.begin(), I.end(), [&](const Fact& f) { return schema.contains(f.rel); });
}

/// The set of constants used by the facts of `I`. Nullary facts contribute
/// nothing.
inline std::set<Constant> adom(const Instance& I) {
  std::set<Constant> out;
  for (const auto& f : I) out.insert(f.args.begin(), f.args.end());
  return out;
}

inline std::set<Constant> adom_union(const std::set<Constant>& a, const std::set<Constant>& b) {
  std::set<Constant> out = a;
  out.insert(b.begin(), b.end());
  return out;
}

/// All facts over `schema` whose arguments lie in `constants`. Nullary facts
/// are included iff `include_nullary` is set.
inline Instance herbrand_slice(const Schema& schema, const std::set<Constant>& constants,
                               bool include_nullary = false) {
  std::vector<Constant> cs(constants.begin(), constants.end());
  Instance out;
  for (const auto& rel : schema.relations()) {
    if (rel.arity == 0) {
      if (include_nullary) out.insert(Fact(rel, {}));
      continue;
    }
    if (cs.empty()) continue;
    // odometer over cs^arity
    std::vector<size_t> idx(static_cast<size_t>(rel.arity), 0);
    while (true) {
      std::vector<Constant> args;
      args.reserve(idx.size());
      for (size_t i : idx) args.push_back(cs[i]);
      out.insert(Fact(rel, std::move(args)));
      size_t pos = idx.size();
      while (pos > 0) {
        --pos;
        if (++idx[pos] < cs.size()) break;
        idx[pos] = 0;
        if (pos == 0) goto done;
      }
    }
  done:;
  }
  return out;
}

/// The canonical constants c1..cn used by the instance enumerator and the
/// bounded checkers.
inline std::vector<Constant> canonical_constants(int n) {
  std::vector<Constant> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) out.push_back(Constant("c" + std::to_string(i)));
  return out;
}

/// Mints `count` pairwise-distinct constants disjoint from `avoid`,
/// deterministically: f1, f2, ... skipping collisions.
inline std::vector<Constant> fresh_constants(const std::set<Constant>& avoid, int count) {
  if (count < 0) throw ValidationError("fresh_constants: negative count");
  std::vector<Constant> out;
  for (int i = 1; static_cast<int>(out.size()) < count; ++i) {
    Constant c("f" + std::to_string(i));
    if (!avoid.count(c)) out.push_back(c);
  }
  return out;
}

/// Streams every instance over a fixed fact universe with at most `max_facts`
/// facts, smallest instances first, combinations in lexicographic index
/// order. Each instance is yielded exactly once.
class InstanceEnumerator {
 public:
  InstanceEnumerator(Instance universe, int max_facts)
      : universe_(universe.begin(), universe.end()),
        max_size_(std::min<size_t>(static_cast<size_t>(std::max(max_facts, 0)), universe.size())) {}

  std::optional<Instance> next() {
    if (done_) return std::nullopt;
    Instance out;
    for (size_t i : idx_) out.insert(universe_[i]);
    advance();
    return out;
  }

 private:
  void advance() {
    // next combination of the current size, else grow the size
    size_t k = idx_.size();
    size_t i = k;
    while (i > 0) {
      --i;
      if (idx_[i] + (k - i) < universe_.size()) {
        ++idx_[i];
        for (size_t j = i + 1; j < k; ++j) idx_[j] = idx_[j - 1] + 1;
        return;
      }
    }
    if (k < max_size_) {
      idx_.resize(k + 1);
      for (size_t j = 0; j <= k; ++j) idx_[j] = j;
      return;
    }
    done_ = true;
  }

  std::vector<Fact> universe_;
  size_t max_size_;
  std::vector<size_t> idx_;  // current combination, empty = empty instance
  bool done_ = false;
};

/// Every instance over the canonical constants {c1..c_domain_size} with at
/// most max_facts facts. Drives the brute-force checkers.
inline InstanceEnumerator enumerate_instances(const Schema& schema, int domain_size,
                                              int max_facts) {
  if (domain_size < 0 || max_facts < 0)
    throw ValidationError("enumerate_instances: negative bound");
  auto cs = canonical_constants(domain_size);
  return InstanceEnumerator(
      herbrand_slice(schema, std::set<Constant>(cs.begin(), cs.end()), true), max_facts);
}

template <typename Fn>
inline void for_each_instance(const Schema& schema, int domain_size, int max_facts, Fn&& fn) {
  auto en = enumerate_instances(schema, domain_size, max_facts);
  while (auto I = en.next()) {
    if (!fn(*I)) return;
  }
}

// ---------------------------------------------------------------------------
// Fact text format: one fact per line, `rel(a,b).`, nullary as `rel().`.
// `%` starts a line comment; whitespace is insignificant. Parsing and
// printing round-trip bit-exactly on canonical text.

inline std::string print_fact(const Fact& f) {
  std::string out = f.rel.name + "(";
  for (size_t i = 0; i < f.args.size(); ++i) {
    if (i) out += ",";
    out += f.args[i].symbol();
  }
  out += ").";
  return out;
}

inline std::string print_instance(const Instance& I) {
  std::string out;
  for (const auto& f : I) {
    out += print_fact(f);
    out += "\n";
  }
  return out;
}

namespace detail {

/// Character cursor with 1-based line/column tracking.
class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_ws_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else {
        return;
      }
    }
  }

  bool eof() {
    skip_ws_and_comments();
    return pos_ >= text_.size();
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char c, const char* what) {
    skip_ws_and_comments();
    if (peek() != c) fail(std::string("expected '") + c + "' " + what);
    bump();
  }

  bool accept(char c) {
    skip_ws_and_comments();
    if (peek() != c) return false;
    bump();
    return true;
  }

  std::string ident(bool allow_upper = false) {
    skip_ws_and_comments();
    char c = peek();
    if (!(is_ident_start(c) || (allow_upper && is_upper_start(c))))
      fail(allow_upper ? "expected an identifier" : "expected a lowercase identifier");
    std::string out;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
      out += text_[pos_];
      bump();
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// rel(a,b) with all-lowercase arguments; arity taken from the argument list.
inline Fact parse_ground_atom(Cursor& cur) {
  std::string name = cur.ident();
  cur.expect('(', "after relation name");
  std::vector<Constant> args;
  if (!cur.accept(')')) {
    do {
      args.emplace_back(cur.ident());
    } while (cur.accept(','));
    cur.expect(')', "to close the argument list");
  }
  int arity = static_cast<int>(args.size());
  return Fact(RelSymbol{name, arity}, std::move(args));
}

}  // namespace detail

/// Parses fact text into an instance. Relations are inferred from the facts;
/// a name used at two arities is an error.
inline Instance parse_facts(std::string_view text) {
  detail::Cursor cur(text);
  Instance out;
  std::map<std::string, int> arities;
  while (!cur.eof()) {
    int line = cur.line(), col = cur.col();
    Fact f = detail::parse_ground_atom(cur);
    cur.expect('.', "after the fact");
    auto [it, fresh] = arities.emplace(f.rel.name, f.rel.arity);
    if (!fresh && it->second != f.rel.arity)
      throw ParseError("relation " + f.rel.name + " used with arities " +
                           std::to_string(it->second) + " and " + std::to_string(f.rel.arity),
                       line, col);
    out.insert(std::move(f));
  }
  return out;
}

/// The schema spanned by an instance's facts.
inline Schema schema_of(const Instance& I) {
  Schema s;
  for (const auto& f : I) {
    if (!s.find(f.rel.name)) s.add(f.rel);
  }
  return s;
}

}  // namespace cfree
