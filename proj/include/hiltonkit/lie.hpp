// Normalization of integer bracket expressions into combinations of basic
// products plus frozen square residues, under a graded sign convention.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "basis.hpp"
#include "order.hpp"
#include "wterm.hpp"

namespace hiltonkit {

using Coeff = boost::multiprecision::cpp_int;

enum class Marker { plain = 0, square = 1 };

// Integer combination of bracket terms. A (h, square) key denotes the
// composition of h with the self-bracket of the identity class one
// dimension below h; squares are terminal and never rewritten further.
struct LieExpr {
  using Key = std::pair<Term, int>;
  struct KeyLess {
    bool operator()(const Key& x, const Key& y) const {
      if (int c = struct_cmp(x.first, y.first)) return c < 0;
      return x.second < y.second;
    }
  };
  std::map<Key, Coeff, KeyLess> terms;
  // Annotations on surviving square keys (canonical term text): doubling
  // kills the class / the class may vanish outright.
  std::set<std::string> two_torsion;
  std::set<std::string> possibly_zero;

  static LieExpr single(const Term& t, Marker m = Marker::plain, Coeff c = 1) {
    LieExpr e;
    e.add(t, m, c);
    return e;
  }

  void add(const Term& t, Marker m, const Coeff& c) {
    if (c == 0) return;
    Key key{t, (int)m};
    auto it = terms.find(key);
    if (it == terms.end()) {
      terms.emplace(std::move(key), c);
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }

  void add_expr(const LieExpr& other, const Coeff& mult = 1) {
    for (const auto& [k, c] : other.terms) add(k.first, (Marker)k.second, c * mult);
    for (const auto& s : other.two_torsion) two_torsion.insert(s);
    for (const auto& s : other.possibly_zero) possibly_zero.insert(s);
  }

  Coeff coeff(const Term& t, Marker m) const {
    auto it = terms.find(Key{t, (int)m});
    return it == terms.end() ? Coeff(0) : it->second;
  }

  bool zero() const { return terms.empty(); }

  bool same_terms(const LieExpr& other) const {
    if (terms.size() != other.terms.size()) return false;
    auto it = other.terms.begin();
    for (const auto& [k, c] : terms) {
      if (!struct_eq(k.first, it->first.first) || k.second != it->first.second ||
          c != it->second)
        return false;
      ++it;
    }
    return true;
  }
};

// Whether a square with the given base height is killed by doubling: the
// base class lives on the sphere one dimension below, so even heights ride
// odd spheres.
inline bool square_two_torsion(int h) { return h % 2 == 0; }
// Whether the square could vanish outright (invertible-element heights).
inline bool square_possibly_zero(int h) { return h == 1 || h == 3 || h == 7; }

inline void apply_square_flags(LieExpr& e, const Term& h, const ExtendedSignature& ext) {
  int ht = height(h, ext);
  if (square_two_torsion(ht)) e.two_torsion.insert(to_string(h));
  if (square_possibly_zero(ht)) e.possibly_zero.insert(to_string(h));
}

// Recomputes the annotation sets from the square keys actually present.
inline void refresh_square_flags(LieExpr& e, const ExtendedSignature& ext) {
  e.two_torsion.clear();
  e.possibly_zero.clear();
  for (const auto& [k, c] : e.terms)
    if ((Marker)k.second == Marker::square) apply_square_flags(e, k.first, ext);
}

// ------------------------------------------------------------ rule kernel ---

// Sign picked up when the two factors of a bracket are exchanged.
inline int swap_sign(const Term& a, const Term& b, const ExtendedSignature& ext) {
  int e = height(a, ext) * height(b, ext);
  return e % 2 == 0 ? 1 : -1;
}

inline int pow_sign(long long e) { return ((e % 2) + 2) % 2 == 0 ? 1 : -1; }

// [a,[u,v]] expands to c1*[[a,u],v] + c2*[u,[a,v]] with
// c1 = (-1)^(p+1), c2 = (-1)^(pq+p+q+1), p = height(a), q = height(u).
// With all heights odd this is the classical Leibniz form (+1, +1).
inline std::pair<int, int> jacobi_signs(const Term& a, const Term& u,
                                        const ExtendedSignature& ext) {
  long long p = height(a, ext), q = height(u, ext);
  return {pow_sign(p + 1), pow_sign(p * q + p + q + 1)};
}

inline LieExpr graded_swap(const Term& t, const ExtendedSignature& ext) {
  if (t->is_leaf()) throw ConfigError("graded_swap needs a bracket, got " + to_string(t));
  LieExpr e;
  e.add(br(t->r, t->l), Marker::plain, swap_sign(t->l, t->r, ext));
  return e;
}

inline LieExpr jacobi_expand(const Term& t, const ExtendedSignature& ext) {
  if (t->is_leaf() || t->r->is_leaf())
    throw ConfigError("jacobi_expand needs shape [a,[u,v]], got " + to_string(t));
  const Term &a = t->l, &u = t->r->l, &v = t->r->r;
  auto [c1, c2] = jacobi_signs(a, u, ext);
  LieExpr e;
  e.add(br(br(a, u), v), Marker::plain, c1);
  e.add(br(u, br(a, v)), Marker::plain, c2);
  int h = height(t, ext);
  for (const auto& [k, c] : e.terms)
    invariant(height(k.first, ext) == h, "expansion must preserve height");
  return e;
}

inline LieExpr square_reduce(const Term& t, const ExtendedSignature& ext) {
  if (t->is_leaf() || !struct_eq(t->l, t->r))
    throw ConfigError("square_reduce needs equal children, got " + to_string(t));
  LieExpr e;
  e.add(t->l, Marker::square, 1);
  apply_square_flags(e, t->l, ext);
  return e;
}

// --------------------------------------------------------- rewrite engine ---

enum class Strategy {
  innermost_leftmost,   // default small-step order
  outermost_rightmost,  // small-step, opposite scan order
  seeded_random,        // small-step, uniform choice per step
  recursive,            // structural bottom-up evaluator
};

namespace detail {

inline bool diag_shape(const Term& t) {
  return !t->is_leaf() && struct_eq(t->l, t->r);
}

enum RuleId {
  r_tors,         // [x,[x,x]] kills the whole term
  r_freeze,       // root [g,g] with g basic becomes (g, square)
  r_jacobi_bdiag, // right child is a diagonal: expand before swapping
  r_swap,         // descending pair: exchange with the graded sign
  r_jacobi,       // right child opens with a left part above a
  r_swapsq,       // diagonal left child blocks the basis shape: move it right
};

inline int rule_class(RuleId r) {
  switch (r) {
    case r_tors:
    case r_freeze:
      return 0;
    case r_swap:
    case r_swapsq:
      return 1;
    default:
      return 2;
  }
}

struct Redex {
  std::vector<int> path;  // 0 = left, 1 = right, from the root
  RuleId rule;
};

// At most one rule per node; the per-node precedence below keeps the rule
// set loop-free (in particular a diagonal right child must expand, not
// bounce between the two swap rules).
inline void scan_node(const Term& t, const BasisOrder& ord, std::vector<int>& path,
                      std::vector<Redex>& out) {
  if (t->is_leaf()) return;
  const Term &a = t->l, &b = t->r;
  bool bdiag = diag_shape(b);
  if (bdiag && struct_eq(a, b->l)) {
    out.push_back({path, r_tors});
  } else if (path.empty() && struct_eq(a, b) && is_basic(a, ord)) {
    out.push_back({path, r_freeze});
  } else if (bdiag) {
    out.push_back({path, r_jacobi_bdiag});
  } else if (ord.less(b, a)) {
    out.push_back({path, r_swap});
  } else if (!b->is_leaf() && ord.less(a, b->l)) {
    out.push_back({path, r_jacobi});
  } else if (diag_shape(a) && ord.less(a, b)) {
    out.push_back({path, r_swapsq});
  }
  path.push_back(0);
  scan_node(a, ord, path, out);
  path.back() = 1;
  scan_node(b, ord, path, out);
  path.pop_back();
}

inline Term subterm_at(const Term& t, const std::vector<int>& path) {
  Term cur = t;
  for (int d : path) cur = d == 0 ? cur->l : cur->r;
  return cur;
}

inline Term replace_at(const Term& t, const std::vector<int>& path, size_t idx,
                       const Term& sub) {
  if (idx == path.size()) return sub;
  if (path[idx] == 0) return br(replace_at(t->l, path, idx + 1, sub), t->r);
  return br(t->l, replace_at(t->r, path, idx + 1, sub));
}

struct Candidate {
  LieExpr::Key key;
  Redex redex;
  int term_index = 0;
};

}  // namespace detail

struct NormalizeOptions {
  Strategy strategy = Strategy::innermost_leftmost;
  std::uint64_t seed = 0;
  long long budget = 200000;  // small-step applications before giving up
};

namespace detail {

inline LieExpr normalize_smallstep(const LieExpr& in, const BasisOrder& ord,
                                   const ExtendedSignature& ext,
                                   const NormalizeOptions& opt) {
  LieExpr state;
  for (const auto& [k, c] : in.terms) {
    if ((Marker)k.second == Marker::square && !is_basic(k.first, ord))
      state.add(br(k.first, k.first), Marker::plain, c);  // melt and re-derive
    else
      state.add(k.first, (Marker)k.second, c);
  }
  std::mt19937_64 rng(opt.seed);
  long long steps = 0;
  for (;;) {
    std::vector<Candidate> cands;
    int term_index = 0;
    int best_class = 3;
    for (const auto& [key, c] : state.terms) {
      if ((Marker)key.second == Marker::square) {
        ++term_index;
        continue;
      }
      std::vector<Redex> redexes;
      std::vector<int> path;
      scan_node(key.first, ord, path, redexes);
      for (auto& r : redexes) {
        best_class = std::min(best_class, rule_class(r.rule));
        cands.push_back({key, std::move(r), term_index});
      }
      ++term_index;
    }
    if (cands.empty()) break;
    std::erase_if(cands, [&](const Candidate& c) {
      return rule_class(c.redex.rule) != best_class;
    });
    size_t pick = 0;
    auto order_key = [](const Candidate& c, bool innermost, bool leftmost) {
      long long depth = (long long)c.redex.path.size();
      return std::tuple<int, long long, std::vector<int>>(
          c.term_index, innermost ? -depth : depth,
          leftmost ? c.redex.path
                   : [&] {
                       auto p = c.redex.path;
                       for (auto& d : p) d = 1 - d;
                       return p;
                     }());
    };
    switch (opt.strategy) {
      case Strategy::innermost_leftmost: {
        size_t best = 0;
        for (size_t i = 1; i < cands.size(); ++i)
          if (order_key(cands[i], true, true) < order_key(cands[best], true, true))
            best = i;
        pick = best;
        break;
      }
      case Strategy::outermost_rightmost: {
        size_t best = 0;
        for (size_t i = 1; i < cands.size(); ++i)
          if (order_key(cands[i], false, false) < order_key(cands[best], false, false))
            best = i;
        pick = best;
        break;
      }
      case Strategy::seeded_random:
        pick = (size_t)(rng() % cands.size());
        break;
      case Strategy::recursive:
        throw DefectError("recursive strategy routed into the step engine");
    }
    const Candidate& cand = cands[pick];
    Term t = cand.key.first;
    Coeff c = state.terms.at(cand.key);
    state.terms.erase(cand.key);
    Term node = subterm_at(t, cand.redex.path);
    switch (cand.redex.rule) {
      case r_tors:
        break;  // the whole term dies
      case r_freeze:
        state.add(node->l, Marker::square, c);
        break;
      case r_swap:
      case r_swapsq: {
        int s = swap_sign(node->l, node->r, ext);
        Term repl = br(node->r, node->l);
        invariant(height(repl, ext) == height(node, ext), "swap must preserve height");
        state.add(replace_at(t, cand.redex.path, 0, repl), Marker::plain, c * s);
        break;
      }
      case r_jacobi_bdiag:
      case r_jacobi: {
        const Term &a = node->l, &u = node->r->l, &v = node->r->r;
        auto [c1, c2] = jacobi_signs(a, u, ext);
        Term t1 = br(br(a, u), v), t2 = br(u, br(a, v));
        invariant(height(t1, ext) == height(node, ext) &&
                      height(t2, ext) == height(node, ext),
                  "expansion must preserve height");
        state.add(replace_at(t, cand.redex.path, 0, t1), Marker::plain, c * c1);
        state.add(replace_at(t, cand.redex.path, 0, t2), Marker::plain, c * c2);
        break;
      }
    }
    if (++steps > opt.budget)
      throw DefectError("rewrite budget exhausted after " + std::to_string(steps) +
                        " steps");
  }
  refresh_square_flags(state, ext);
  for (const auto& [k, c] : state.terms)
    invariant(is_basic(k.first, ord), "normal form keys must be basic");
  return state;
}

// Structural evaluator: children first, then repair the root bracket.
// Square keys melt back into diagonals when they feed a surrounding bracket.
inline Term rehydrate(const LieExpr::Key& k) {
  return (Marker)k.second == Marker::square ? br(k.first, k.first) : k.first;
}

inline LieExpr fix_pair(const Term& a, const Term& b, const BasisOrder& ord,
                        const ExtendedSignature& ext);

inline LieExpr fix_bilinear(const LieExpr& L, const LieExpr& R, const BasisOrder& ord,
                            const ExtendedSignature& ext) {
  LieExpr out;
  for (const auto& [kl, cl] : L.terms)
    for (const auto& [kr, cr] : R.terms)
      out.add_expr(fix_pair(rehydrate(kl), rehydrate(kr), ord, ext), cl * cr);
  return out;
}

// Normal form of [a,b] where each input is basic or a diagonal of a basic.
inline LieExpr fix_pair(const Term& a, const Term& b, const BasisOrder& ord,
                        const ExtendedSignature& ext) {
  if (diag_shape(b) && struct_eq(a, b->l)) return {};  // [x,[x,x]]
  if (diag_shape(a) && struct_eq(b, a->l)) return {};  // [[x,x],x]
  if (struct_eq(a, b)) {
    if (is_basic(a, ord)) {
      LieExpr e;
      e.add(a, Marker::square, 1);
      return e;
    }
    invariant(diag_shape(a), "fix_pair inputs must be basic or diagonal");
    return {};  // [[g,g],[g,g]] cancels to zero
  }
  if (diag_shape(b) || (!b->is_leaf() && is_basic(b, ord) && ord.less(a, b->l))) {
    // Expand against the right child.
    const Term &u = b->l, &v = b->r;
    auto [c1, c2] = jacobi_signs(a, u, ext);
    LieExpr e1 = fix_bilinear(fix_pair(a, u, ord, ext), LieExpr::single(v), ord, ext);
    LieExpr e2 = fix_bilinear(LieExpr::single(u), fix_pair(a, v, ord, ext), ord, ext);
    LieExpr out;
    out.add_expr(e1, c1);
    out.add_expr(e2, c2);
    return out;
  }
  if (diag_shape(a)) {
    LieExpr out;
    out.add_expr(fix_pair(b, a, ord, ext), swap_sign(a, b, ext));
    return out;
  }
  if (ord.less(b, a)) {
    LieExpr out;
    out.add_expr(fix_pair(b, a, ord, ext), swap_sign(a, b, ext));
    return out;
  }
  Term t = br(a, b);
  invariant(is_basic(t, ord), "fix_pair fell through on a non-basic bracket");
  return LieExpr::single(t);
}

inline LieExpr normalize_term_recursive(const Term& t, const BasisOrder& ord,
                                        const ExtendedSignature& ext) {
  if (t->is_leaf()) return LieExpr::single(t);
  LieExpr L = normalize_term_recursive(t->l, ord, ext);
  LieExpr R = normalize_term_recursive(t->r, ord, ext);
  return fix_bilinear(L, R, ord, ext);
}

inline LieExpr normalize_recursive(const LieExpr& in, const BasisOrder& ord,
                                   const ExtendedSignature& ext) {
  LieExpr out;
  for (const auto& [k, c] : in.terms) {
    if ((Marker)k.second == Marker::square && is_basic(k.first, ord)) {
      out.add(k.first, Marker::square, c);
    } else {
      Term t = rehydrate(k);
      out.add_expr(normalize_term_recursive(t, ord, ext), c);
    }
  }
  refresh_square_flags(out, ext);
  return out;
}

}  // namespace detail

inline LieExpr normalize(const LieExpr& e, const BasisOrder& ord,
                         const ExtendedSignature& ext,
                         const NormalizeOptions& opt = {}) {
  if (opt.strategy == Strategy::recursive)
    return detail::normalize_recursive(e, ord, ext);
  return detail::normalize_smallstep(e, ord, ext, opt);
}

inline LieExpr normalize(const LieExpr& e, const BasisOrder& ord, const Signature& sig,
                         const NormalizeOptions& opt = {}) {
  return normalize(e, ord, ExtendedSignature::from(sig), opt);
}

// Coefficients of (γ, plain) and (γ, square) in the normal form of e.
inline std::pair<Coeff, Coeff> hilton_coefficient(const LieExpr& e, const Term& gamma,
                                                  const BasisOrder& ord,
                                                  const ExtendedSignature& ext) {
  if (!is_basic(gamma, ord))
    throw ConfigError("projection target must be basic: " + to_string(gamma));
  LieExpr n = normalize(e, ord, ext);
  return {n.coeff(gamma, Marker::plain), n.coeff(gamma, Marker::square)};
}

// ------------------------------------------------------------ text syntax ---

// Parses "3*[i1,i2] - 2*[i2,[i1,i2]] + sq([i1,i2])"; '*' is optional.
inline LieExpr parse_lie_expr(const std::string& text) {
  LieExpr e;
  size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
  };
  auto fail = [&](const std::string& why) {
    throw ConfigError("bad expression '" + text + "' at offset " + std::to_string(pos) +
                      ": " + why);
  };
  skip();
  if (pos == text.size()) fail("empty expression");
  bool first = true;
  while (pos < text.size()) {
    skip();
    Coeff sign = 1;
    if (!first || text[pos] == '+' || text[pos] == '-') {
      if (pos >= text.size() || (text[pos] != '+' && text[pos] != '-')) {
        if (first) {
          // leading term without sign
        } else {
          fail("expected '+' or '-'");
        }
      } else {
        sign = text[pos] == '-' ? -1 : 1;
        ++pos;
        skip();
      }
    }
    first = false;
    Coeff mag = 1;
    if (pos < text.size() && std::isdigit((unsigned char)text[pos])) {
      size_t start = pos;
      while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
      mag = Coeff(text.substr(start, pos - start));
      skip();
      if (pos < text.size() && text[pos] == '*') {
        ++pos;
        skip();
      }
      if (pos == text.size() || (text[pos] != '[' && text[pos] != 'i' && text[pos] != 's'))
        fail("coefficient must multiply a term");
    }
    Marker marker = Marker::plain;
    std::string term_text;
    if (pos + 2 < text.size() && text.compare(pos, 3, "sq(") == 0) {
      marker = Marker::square;
      pos += 3;
      size_t depth = 0, start = pos;
      while (pos < text.size() && (text[pos] != ')' || depth > 0)) {
        if (text[pos] == '[') ++depth;
        if (text[pos] == ']') --depth;
        ++pos;
      }
      if (pos == text.size()) fail("unterminated sq(...)");
      term_text = text.substr(start, pos - start);
      ++pos;
    } else if (pos < text.size() && (text[pos] == '[' || text[pos] == 'i')) {
      size_t depth = 0, start = pos;
      while (pos < text.size()) {
        char ch = text[pos];
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (depth == 0 && (ch == '+' || ch == '-')) break;
        ++pos;
      }
      term_text = text.substr(start, pos - start);
    } else {
      fail("expected a term");
    }
    e.add(parse_term(term_text), marker, sign * mag);
    skip();
  }
  return e;
}

inline std::string render_lie_expr(const LieExpr& e) {
  if (e.zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [k, c] : e.terms) {
    Coeff mag = c < 0 ? Coeff(-c) : c;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    if (mag != 1) out += mag.str() + "*";
    if ((Marker)k.second == Marker::square)
      out += "sq(" + to_string(k.first) + ")";
    else
      out += to_string(k.first);
  }
  return out;
}

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::innermost_leftmost: return "innermost-leftmost";
    case Strategy::outermost_rightmost: return "outermost-rightmost";
    case Strategy::seeded_random: return "seeded-random";
    case Strategy::recursive: return "recursive";
  }
  return "?";
}

}  // namespace hiltonkit
