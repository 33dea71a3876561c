// Total orders on bracket terms used to define and sort basic products.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "wterm.hpp"

namespace hiltonkit {

// A weight-compatible total order on terms.
//
// Comparison chain:
//   0. explicit positions, when both terms carry one (see build_prec);
//   1. weight, ascending;
//   2. leaves by generator rank (default rank = symbol index);
//   3. multidegree, counted in rank coordinates: more copies of the
//      lowest-ranked generator first;
//   4. recursively (left, then right).
struct BasisOrder {
  std::vector<int> rank;                 // rank[sym-1]; empty slots fall back to sym-1
  std::map<std::string, int> explicit_pos;  // canonical text -> assigned position

  static BasisOrder standard() { return BasisOrder{}; }

  // Generators listed in the desired order, e.g. {2,1} puts i2 before i1.
  static BasisOrder permuted(const std::vector<int>& symbols_in_order) {
    BasisOrder o;
    int maxsym = 0;
    for (int s : symbols_in_order) maxsym = std::max(maxsym, s);
    o.rank.assign(maxsym, -1);
    for (int pos = 0; pos < (int)symbols_in_order.size(); ++pos) {
      int s = symbols_in_order[pos];
      if (s < 1 || o.rank[s - 1] != -1) throw ConfigError("bad generator permutation");
      o.rank[s - 1] = pos;
    }
    for (int v : o.rank)
      if (v == -1) throw ConfigError("generator permutation must cover 1..max");
    return o;
  }

  int generator_rank(int symbol) const {
    if (symbol >= 1 && symbol <= (int)rank.size()) return rank[symbol - 1];
    return symbol - 1;
  }

  int cmp(const Term& a, const Term& b) const {
    if (!explicit_pos.empty()) {
      auto ia = explicit_pos.find(to_string(a));
      auto ib = explicit_pos.find(to_string(b));
      if (ia != explicit_pos.end() && ib != explicit_pos.end()) {
        if (ia->second != ib->second) return ia->second < ib->second ? -1 : 1;
        return 0;
      }
    }
    int wa = weight(a), wb = weight(b);
    if (wa != wb) return wa < wb ? -1 : 1;
    if (a->is_leaf() && b->is_leaf()) {
      int ra = generator_rank(a->leaf), rb = generator_rank(b->leaf);
      return ra < rb ? -1 : (ra > rb ? 1 : 0);
    }
    if (int c = mdeg_cmp(a, b)) return c;
    if (int c = cmp(a->l, b->l)) return c;
    return cmp(a->r, b->r);
  }

  bool less(const Term& a, const Term& b) const { return cmp(a, b) < 0; }
  bool leq(const Term& a, const Term& b) const { return cmp(a, b) <= 0; }

 private:
  int mdeg_cmp(const Term& a, const Term& b) const {
    int n = std::max(max_symbol(a), max_symbol(b));
    std::vector<int> da = mdeg(a, n), db = mdeg(b, n);
    // Walk generators from lowest rank to highest; a term with more copies
    // of an earlier generator comes first.
    std::vector<int> syms(n);
    for (int i = 0; i < n; ++i) syms[i] = i + 1;
    std::sort(syms.begin(), syms.end(), [&](int x, int y) {
      return generator_rank(x) < generator_rank(y);
    });
    for (int s : syms) {
      if (da[s - 1] != db[s - 1]) return da[s - 1] > db[s - 1] ? -1 : 1;
    }
    return 0;
  }
};

}  // namespace hiltonkit
