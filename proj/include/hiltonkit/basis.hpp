// Basic (Hall-style) bracket products: membership test, enumeration,
// rank counts, and repair of user-supplied precedence lists.
#pragma once

#include <queue>
#include <set>
#include <vector>

#include "order.hpp"
#include "wterm.hpp"

namespace hiltonkit {

// [a,b] is basic iff a and b are basic, a < b, and the right factor is a
// leaf or opens with a left part <= a.
inline bool is_basic(const Term& t, const BasisOrder& ord) {
  if (t->is_leaf()) return true;
  if (!is_basic(t->l, ord) || !is_basic(t->r, ord)) return false;
  if (!ord.less(t->l, t->r)) return false;
  if (t->r->is_leaf()) return true;
  return !ord.less(t->l, t->r->l);
}

// All basic products on r generators up to the given weight, sorted by ord
// (weight-major). Grown weight by weight so each class can be sorted before
// the next one consults it.
inline std::vector<std::vector<Term>> enumerate_basis_by_weight(
    int r, int wmax, const BasisOrder& ord) {
  if (r < 1) throw ConfigError("need at least one generator");
  if (wmax < 1) throw ConfigError("weight bound must be >= 1");
  std::vector<std::vector<Term>> cls(wmax + 1);
  for (int s = 1; s <= r; ++s) cls[1].push_back(atom(s));
  auto by_ord = [&](const Term& a, const Term& b) { return ord.less(a, b); };
  std::sort(cls[1].begin(), cls[1].end(), by_ord);
  for (int w = 2; w <= wmax; ++w) {
    for (int wa = 1; wa < w; ++wa) {
      for (const Term& a : cls[wa]) {
        for (const Term& b : cls[w - wa]) {
          Term t = br(a, b);
          if (is_basic(t, ord)) cls[w].push_back(t);
        }
      }
    }
    std::sort(cls[w].begin(), cls[w].end(), by_ord);
  }
  return cls;
}

inline std::vector<Term> enumerate_basis(int r, int wmax, const BasisOrder& ord) {
  auto cls = enumerate_basis_by_weight(r, wmax, ord);
  std::vector<Term> out;
  for (auto& c : cls)
    for (auto& t : c) out.push_back(t);
  return out;
}

// Number of basic products of the given weight on r generators:
// (1/w) * sum over d|w of mu(d) * r^(w/d).
inline long long witt_rank(int r, int w) {
  if (r < 1 || w < 1) throw ConfigError("witt_rank needs r >= 1, w >= 1");
  auto mu = [](int n) {
    int m = 1;
    for (int p = 2; p * p <= n; ++p) {
      if (n % p == 0) {
        n /= p;
        if (n % p == 0) return 0;
        m = -m;
      }
    }
    if (n > 1) m = -m;
    return m;
  };
  auto ipow = [](long long base, int e) {
    long long v = 1;
    while (e--) v *= base;
    return v;
  };
  long long total = 0;
  for (int d = 1; d <= w; ++d)
    if (w % d == 0) total += mu(d) * ipow(r, w / d);
  return total / w;
}

// Repairs a user-supplied precedence list into a legal order:
//  - weight classes are processed in ascending weight;
//  - generators are re-imposed in symbol order regardless of the input;
//  - inside a weight class, terms sharing a right factor must follow the
//    already-decided order of their left factors; remaining freedom keeps
//    the input's relative positions (stable topological sort).
// A compliant input is a fixed point. Every listed term must be a basic
// product under the order being built.
inline BasisOrder build_prec(const std::vector<Term>& input) {
  BasisOrder ord;  // identity generator ranks
  std::map<std::string, int> seen;
  std::map<int, std::vector<std::pair<int, Term>>> classes;  // weight -> (input pos, term)
  int maxsym = 0;
  for (int pos = 0; pos < (int)input.size(); ++pos) {
    const Term& t = input[pos];
    std::string key = to_string(t);
    if (!seen.emplace(key, pos).second)
      throw ConfigError("duplicate term in precedence list: " + key);
    classes[weight(t)].emplace_back(pos, t);
    maxsym = std::max(maxsym, max_symbol(t));
  }
  int next_pos = 0;
  for (int s = 1; s <= maxsym; ++s) ord.explicit_pos[to_string(atom(s))] = next_pos++;
  for (auto& [w, members] : classes) {
    if (w == 1) continue;  // generators already placed
    for (auto& [pos, t] : members)
      if (!is_basic(t, ord))
        throw ConfigError("precedence list entry is not a basic product: " + to_string(t));
    int n = (int)members.size();
    std::vector<std::vector<int>> out_edges(n);
    std::vector<int> indeg(n, 0);
    for (int x = 0; x < n; ++x) {
      for (int y = x + 1; y < n; ++y) {
        const Term& tx = members[x].second;
        const Term& ty = members[y].second;
        if (!struct_eq(tx->r, ty->r)) continue;
        int c = ord.cmp(tx->l, ty->l);
        invariant(c != 0, "distinct terms share both factors");
        int from = c < 0 ? x : y, to = c < 0 ? y : x;
        out_edges[from].push_back(to);
        ++indeg[to];
      }
    }
    using Item = std::pair<int, int>;  // (input pos, member index)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (int x = 0; x < n; ++x)
      if (indeg[x] == 0) ready.push({members[x].first, x});
    int emitted = 0;
    while (!ready.empty()) {
      auto [pos, x] = ready.top();
      ready.pop();
      ord.explicit_pos[to_string(members[x].second)] = next_pos++;
      ++emitted;
      for (int y : out_edges[x])
        if (--indeg[y] == 0) ready.push({members[y].first, y});
    }
    invariant(emitted == n, "precedence constraints form a cycle");
  }
  return ord;
}

}  // namespace hiltonkit
