// Bracket terms over generator symbols, signatures, and shared error types.
#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiltonkit {

// ---------------------------------------------------------------- errors ---

// User-facing configuration problem (bad signature, bad flags, bad input term).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The calculus does not cover the requested pattern (UnsupportedPattern /
// Unrecognized). Not a bug: the rule set is intentionally closed.
struct CalculusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal invariant violation or exhausted rewrite budget.
struct DefectError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Global tally of invariant checks and violations. Checks are always on;
// a violation throws DefectError *and* bumps the counter so harnesses can
// assert "zero violations" over whole suites.
inline std::atomic<std::uint64_t>& invariant_checks() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}
inline std::atomic<std::uint64_t>& invariant_violations() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}
inline void invariant(bool ok, const std::string& what) {
  invariant_checks().fetch_add(1, std::memory_order_relaxed);
  if (!ok) {
    invariant_violations().fetch_add(1, std::memory_order_relaxed);
    throw DefectError("invariant violated: " + what);
  }
}

// ----------------------------------------------------------------- terms ---

struct WTerm;
using Term = std::shared_ptr<const WTerm>;

// Immutable binary bracket tree. A leaf holds a 1-based generator symbol;
// a node holds two subterms.
struct WTerm {
  int leaf = -1;  // >= 1 for leaves, -1 for nodes
  Term l, r;
  bool is_leaf() const { return leaf >= 1; }
};

inline Term atom(int symbol) {
  if (symbol < 1) throw ConfigError("generator symbol must be >= 1");
  auto t = std::make_shared<WTerm>();
  t->leaf = symbol;
  return t;
}

inline Term br(Term a, Term b) {
  if (!a || !b) throw ConfigError("bracket of null term");
  auto t = std::make_shared<WTerm>();
  t->l = std::move(a);
  t->r = std::move(b);
  return t;
}

inline bool struct_eq(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->is_leaf() != b->is_leaf()) return false;
  if (a->is_leaf()) return a->leaf == b->leaf;
  return struct_eq(a->l, b->l) && struct_eq(a->r, b->r);
}

// Canonical structural comparison (leaves before nodes, then recursive).
// This is a *map key* order, not the basis order.
inline int struct_cmp(const Term& a, const Term& b) {
  if (a.get() == b.get()) return 0;
  if (a->is_leaf() != b->is_leaf()) return a->is_leaf() ? -1 : 1;
  if (a->is_leaf()) return a->leaf < b->leaf ? -1 : (a->leaf > b->leaf ? 1 : 0);
  if (int c = struct_cmp(a->l, b->l)) return c;
  return struct_cmp(a->r, b->r);
}

struct TermLess {
  bool operator()(const Term& a, const Term& b) const { return struct_cmp(a, b) < 0; }
};

inline int weight(const Term& t) {
  return t->is_leaf() ? 1 : weight(t->l) + weight(t->r);
}

// Number of occurrences of each symbol 1..nsym (dense count vector).
inline void mdeg_into(const Term& t, std::vector<int>& out) {
  if (t->is_leaf()) {
    if (t->leaf > (int)out.size()) out.resize(t->leaf, 0);
    out[t->leaf - 1] += 1;
    return;
  }
  mdeg_into(t->l, out);
  mdeg_into(t->r, out);
}
inline std::vector<int> mdeg(const Term& t, int nsym) {
  std::vector<int> out(nsym, 0);
  mdeg_into(t, out);
  return out;
}

inline int max_symbol(const Term& t) {
  if (t->is_leaf()) return t->leaf;
  return std::max(max_symbol(t->l), max_symbol(t->r));
}

inline bool contains_symbol(const Term& t, int symbol) {
  if (t->is_leaf()) return t->leaf == symbol;
  return contains_symbol(t->l, symbol) || contains_symbol(t->r, symbol);
}

// -------------------------------------------------------------- printing ---

inline std::string to_string(const Term& t) {
  if (t->is_leaf()) return "i" + std::to_string(t->leaf);
  return "[" + to_string(t->l) + "," + to_string(t->r) + "]";
}

// Parses "[i2,[i1,[i1,i2]]]"; whitespace-insensitive.
inline Term parse_term(const std::string& text) {
  size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
  };
  auto fail = [&](const std::string& why) -> Term {
    throw ConfigError("bad term '" + text + "' at offset " + std::to_string(pos) + ": " + why);
  };
  std::function<Term()> rec = [&]() -> Term {
    skip();
    if (pos >= text.size()) return fail("unexpected end");
    if (text[pos] == '[') {
      ++pos;
      Term a = rec();
      skip();
      if (pos >= text.size() || text[pos] != ',') return fail("expected ','");
      ++pos;
      Term b = rec();
      skip();
      if (pos >= text.size() || text[pos] != ']') return fail("expected ']'");
      ++pos;
      return br(a, b);
    }
    if (text[pos] == 'i') {
      ++pos;
      size_t start = pos;
      while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
      if (start == pos) return fail("expected digits after 'i'");
      return atom(std::stoi(text.substr(start, pos - start)));
    }
    return fail("expected '[' or generator 'iN'");
  };
  Term t = rec();
  skip();
  if (pos != text.size()) throw ConfigError("trailing characters in term '" + text + "'");
  return t;
}

// ------------------------------------------------------------ signatures ---

// Codimension list k_1..k_r plus optional ambient dimension m.
struct Signature {
  std::vector<int> k;
  std::optional<int> m;

  int r() const { return (int)k.size(); }

  void validate() const {
    if (k.empty()) throw ConfigError("signature needs at least one codimension");
    for (int v : k)
      if (v < 2) throw ConfigError("every codimension must be >= 2");
    if (m && *m < 2) throw ConfigError("ambient dimension must be >= 2");
  }
};

// Alphabet extended by reduction symbols; records where each new symbol
// came from so tables can print both the symbol and its originating term.
struct ExtendedSignature {
  std::vector<int> k;           // codims, index symbol-1; 0 = not yet assigned
  int base_r = 0;               // how many symbols are original generators
  std::optional<int> m;
  struct Provenance {
    int j = 0, i = 0;           // the reduction direction that created the symbol
    Term gamma;                 // original term the symbol stands for
  };
  std::map<int, Provenance> provenance;  // new symbol -> origin

  static ExtendedSignature from(const Signature& sig) {
    sig.validate();
    ExtendedSignature e;
    e.k = sig.k;
    e.base_r = sig.r();
    e.m = sig.m;
    return e;
  }

  int nsym() const { return (int)k.size(); }

  int codim(int symbol) const {
    if (symbol < 1 || symbol > (int)k.size() || k[symbol - 1] == 0)
      throw ConfigError("symbol i" + std::to_string(symbol) + " outside alphabet");
    return k[symbol - 1];
  }

  // Appends (or fills) a symbol with the given codimension; returns its index.
  int add_symbol(int symbol, int codim_value) {
    if (symbol < 1) throw ConfigError("bad symbol index");
    if ((int)k.size() < symbol) k.resize(symbol, 0);
    if (k[symbol - 1] != 0 && k[symbol - 1] != codim_value)
      throw ConfigError("symbol i" + std::to_string(symbol) + " already has a codimension");
    k[symbol - 1] = codim_value;
    return symbol;
  }
};

// height(t) = sum of leaf codims − (weight − 1); equals codim of the class.
inline int height(const Term& t, const ExtendedSignature& ext) {
  if (t->is_leaf()) return ext.codim(t->leaf);
  return height(t->l, ext) + height(t->r, ext) - 1;
}
inline int height(const Term& t, const Signature& sig) {
  return height(t, ExtendedSignature::from(sig));
}

}  // namespace hiltonkit
