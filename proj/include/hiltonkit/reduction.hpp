// Symbolic reduction sequences: weight-2 brackets collapse to fresh symbols,
// composite by composite, and replaying a sequence on a basic product yields
// its projection pipeline.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "basis.hpp"
#include "lie.hpp"
#include "order.hpp"
#include "splitting.hpp"
#include "wterm.hpp"

namespace hiltonkit {

// Replaces every [i_i,i_j] / [i_j,i_i] subtree by the fresh symbol, in one
// pass. The fresh symbol must not already occur.
inline Term tau_S(const Term& t, int j, int i, int new_symbol) {
  if (contains_symbol(t, new_symbol))
    throw ConfigError("fresh symbol i" + std::to_string(new_symbol) +
                      " already occurs in " + to_string(t));
  auto rec = [&](auto&& self, const Term& cur) -> Term {
    if (cur->is_leaf()) return cur;
    Term l = self(self, cur->l);
    Term r = self(self, cur->r);
    if (l->is_leaf() && r->is_leaf() &&
        ((l->leaf == i && r->leaf == j) || (l->leaf == j && r->leaf == i)))
      return atom(new_symbol);
    if (l.get() == cur->l.get() && r.get() == cur->r.get()) return cur;
    return br(l, r);
  };
  return rec(rec, t);
}

struct ReductionStep {
  int index = 0;       // 1-based position in the sequence
  int j = 0, i = 0;    // collapsed generator pair, i < j
  int new_symbol = 0;  // symbol standing for the collapsed composite
  int new_codim = 0;   // codim(i) + codim(j) - 1
  Term gamma;          // the composite this step was created for
};

struct ReductionSequence {
  Signature base;
  BasisOrder ord;
  ExtendedSignature ext;  // base alphabet plus every created symbol
  std::vector<ReductionStep> steps;
};

// "tau^S_{j,i}" (or another flavor letter for the geometric replay).
inline std::string render_step(const ReductionStep& s, char flavor = 'S') {
  return std::string("tau^") + flavor + "_{" + std::to_string(s.j) + "," +
         std::to_string(s.i) + "}";
}

// Builds the reduction sequence: composites are taken in basis order; the
// n-th one, with all earlier steps applied, must already sit at weight 2 —
// that is the compatibility requirement on the order — and then collapses
// to symbol r + n.
inline ReductionSequence build_TS(const Signature& sig, const BasisOrder& ord,
                                  std::optional<int> limit = {}) {
  sig.validate();
  int r = sig.r();
  long long lim;
  if (limit) {
    if (*limit < 0) throw ConfigError("step limit must be >= 0");
    lim = *limit;
  } else {
    int w0 = splitting_weight_bound(sig);  // needs m
    lim = 0;
    for (int w = 2; w <= w0; ++w) lim += witt_rank(r, w);
  }
  int wmax = 1;
  for (long long seen = 0; seen < lim && wmax < 64;) seen += witt_rank(r, ++wmax);
  std::vector<Term> composites;
  for (const Term& t : enumerate_basis(r, wmax, ord))
    if (!t->is_leaf()) composites.push_back(t);
  std::stable_sort(composites.begin(), composites.end(),
                   [&](const Term& a, const Term& b) { return ord.less(a, b); });
  invariant((long long)composites.size() >= lim, "composite enumeration fell short");

  ReductionSequence seq{sig, ord, ExtendedSignature::from(sig), {}};
  for (int n = 1; n <= lim; ++n) {
    Term g = composites[n - 1];
    Term cur = g;
    for (const auto& s : seq.steps) cur = tau_S(cur, s.j, s.i, s.new_symbol);
    if (cur->is_leaf() || !cur->l->is_leaf() || !cur->r->is_leaf() ||
        cur->l->leaf == cur->r->leaf)
      throw ConfigError("order incompatible with reduction: " + to_string(g) +
                        " reduces to " + to_string(cur) +
                        ", expected a pair of distinct symbols");
    int a = cur->l->leaf, b = cur->r->leaf;
    ReductionStep step;
    step.index = n;
    step.i = std::min(a, b);
    step.j = std::max(a, b);
    step.new_symbol = r + n;
    step.new_codim = seq.ext.codim(step.i) + seq.ext.codim(step.j) - 1;
    step.gamma = g;
    seq.ext.add_symbol(step.new_symbol, step.new_codim);
    seq.ext.provenance[step.new_symbol] = {step.j, step.i, g};
    seq.steps.push_back(step);
  }
  return seq;
}

// Same construction, but the precedence comes from a user-supplied list
// (repaired into a legal order first).
inline ReductionSequence build_TS_gamma(const Signature& sig,
                                        const std::vector<Term>& precedence,
                                        std::optional<int> limit = {}) {
  return build_TS(sig, build_prec(precedence), limit);
}

inline Term apply_prefix(const ReductionSequence& seq, size_t n, const Term& t) {
  if (n > seq.steps.size())
    throw ConfigError("prefix length exceeds the sequence");
  Term cur = t;
  for (size_t idx = 0; idx < n; ++idx)
    cur = tau_S(cur, seq.steps[idx].j, seq.steps[idx].i, seq.steps[idx].new_symbol);
  return cur;
}

struct Pipeline {
  std::vector<ReductionStep> steps;  // the effective steps, in application order
  int final_symbol = 0;
};

// "p_6 o tau^R_{4,1} o tau^R_{3,1} o tau^R_{2,1}" — applied right to left.
inline std::string render_pipeline(const Pipeline& p) {
  std::string out = "p_" + std::to_string(p.final_symbol);
  for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it)
    out += " o " + render_step(*it, 'R');
  return out;
}

// Replays the sequence on one basic product, keeping exactly the steps whose
// symbol pair is present, until the term shrinks to its own symbol.
inline Pipeline hilton_pipeline(const Term& gamma, const ReductionSequence& seq) {
  if (!is_basic(gamma, seq.ord))
    throw ConfigError("pipeline target must be basic: " + to_string(gamma));
  Term cur = gamma;
  Pipeline p;
  for (const auto& step : seq.steps) {
    if (cur->is_leaf()) break;
    if (!contains_symbol(cur, step.i) || !contains_symbol(cur, step.j)) continue;
    Term next = tau_S(cur, step.j, step.i, step.new_symbol);
    if (struct_eq(next, cur))
      throw ConfigError(render_step(step) + " touches no bracket of " + to_string(cur));
    invariant(weight(next) < weight(cur), "each kept step must shrink the term");
    p.steps.push_back(step);
    cur = next;
  }
  if (!cur->is_leaf())
    throw ConfigError("sequence does not reduce " + to_string(gamma) +
                      " to a symbol; stopped at " + to_string(cur));
  p.final_symbol = cur->leaf;
  if (p.final_symbol > seq.base.r()) {
    auto it = seq.ext.provenance.find(p.final_symbol);
    invariant(it != seq.ext.provenance.end() && struct_eq(it->second.gamma, gamma),
              "pipeline must land on the symbol created for its target");
  }
  return p;
}

struct HiltonResult {
  Coeff plain, square;
  Pipeline pipeline;
};

// Coefficient projection plus the geometric pipeline that realizes it.
inline HiltonResult hilton(const LieExpr& e, const Term& gamma,
                           const ReductionSequence& seq) {
  auto [p, s] = hilton_coefficient(e, gamma, seq.ord, seq.ext);
  return {p, s, hilton_pipeline(gamma, seq)};
}

}  // namespace hiltonkit
