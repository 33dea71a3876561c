#pragma once

// Cell-level calculus on links of sphere products.
//
// A SymLink models a disjoint union of embedded components, one per symbol,
// each given as a signed list of product cells.  Every cell is an ordered
// product of factors: spheres attached to a registered linking pair (side a
// or side b) and points (either anonymous base points or points freed from a
// sphere by a transverse intersection).  The operations provided here are
//   * rep            - the model link of a bracket term,
//   * tau_eval       - the transverse intersection of one component with a
//                      membrane spanned by another,
//   * tau_append/p   - the same, recorded as a fresh component / read off as
//                      a class,
//   * tau_w / tau_R  - weight-by-weight corrective surgery that trades a
//                      bracket chain between two components for a fresh
//                      symbol,
//   * extract        - recognition of a link as a signed sum of model links.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hiltonkit/lie.hpp"
#include "hiltonkit/wterm.hpp"

namespace hiltonkit {

// ---------------------------------------------------------------------------
// Cells and links
// ---------------------------------------------------------------------------

constexpr int side_a = 0;
constexpr int side_b = 1;

struct Factor {
    bool sphere = false;  // false: a point factor of dimension zero
    int dim = 0;          // sphere dimension (0 for points)
    int pair = -1;        // linking pair id; -1 for anonymous base points
    int side = -1;        // side_a / side_b; -1 for anonymous base points
    int shift = 0;        // parallel-copy index

    friend bool operator==(const Factor& x, const Factor& y) {
        return x.sphere == y.sphere && x.dim == y.dim && x.pair == y.pair &&
               x.side == y.side && x.shift == y.shift;
    }
    friend bool operator<(const Factor& x, const Factor& y) {
        return std::tie(x.sphere, x.dim, x.pair, x.side, x.shift) <
               std::tie(y.sphere, y.dim, y.pair, y.side, y.shift);
    }
};

inline Factor sphere_factor(int pair, int side, int dim, int shift = 0) {
    return Factor{true, dim, pair, side, shift};
}
inline Factor freed_point(int pair, int side, int shift) {
    return Factor{false, 0, pair, side, shift};
}
inline Factor base_point() { return Factor{}; }

struct Cell {
    int sign = 1;
    std::vector<Factor> fs;  // outermost factor first

    int dim() const {
        int d = 0;
        for (const Factor& f : fs) d += f.dim;
        return d;
    }
    bool all_points() const {
        for (const Factor& f : fs)
            if (f.sphere) return false;
        return true;
    }
    friend bool operator==(const Cell& x, const Cell& y) {
        return x.sign == y.sign && x.fs == y.fs;
    }
    friend bool operator<(const Cell& x, const Cell& y) {
        return std::tie(x.sign, x.fs) < std::tie(y.sign, y.fs);
    }
};

struct PairInfo {
    int dim_a = 0;
    int dim_b = 0;
    int level = 0;  // weight of the bracket node that created the pair, minus one
    Term origin;    // the bracket node itself
};

struct SymLink {
    std::map<int, std::vector<Cell>> comps;  // symbol -> cells
    std::map<int, PairInfo> pairs;           // pair id -> registry entry
    ExtendedSignature ext;
    int ambient_h = 0;  // common total height; 0 when components mix heights
    int next_pair = 0;
};

// Registry consistency plus, when an ambient height is tracked, the dimension
// balance: every cell of the component of symbol c has total dimension
// ambient_h - codim(c).
inline void check_link(const SymLink& link) {
    for (const auto& [sym, cells] : link.comps) {
        const int codim = link.ext.codim(sym);
        for (const Cell& c : cells) {
            invariant(c.sign == 1 || c.sign == -1, "cell signs are unit");
            for (const Factor& f : c.fs) {
                if (!f.sphere) {
                    invariant(f.dim == 0, "point factors have dimension zero");
                    continue;
                }
                auto it = link.pairs.find(f.pair);
                invariant(it != link.pairs.end(), "sphere factor references a registered pair");
                const int want = f.side == side_a ? it->second.dim_a : it->second.dim_b;
                invariant(f.dim == want, "sphere factor dimension matches its pair registry");
            }
            if (link.ambient_h > 0)
                invariant(c.dim() == link.ambient_h - codim,
                          "cell dimension equals ambient height minus component codimension");
        }
    }
}

// ---------------------------------------------------------------------------
// Model links
// ---------------------------------------------------------------------------

namespace linkdetail {

// Prefixing a factor absorbs a lone anonymous base point.
inline Cell prefixed(const Factor& f, const Cell& c) {
    if (c.fs.size() == 1 && !c.fs[0].sphere && c.fs[0].pair < 0)
        return Cell{c.sign, {f}};
    Cell out{c.sign, {}};
    out.fs.reserve(c.fs.size() + 1);
    out.fs.push_back(f);
    out.fs.insert(out.fs.end(), c.fs.begin(), c.fs.end());
    return out;
}

inline void merge_comps(std::map<int, std::vector<Cell>>& into,
                        std::map<int, std::vector<Cell>>&& from) {
    for (auto& [sym, cells] : from) {
        auto& dst = into[sym];
        dst.insert(dst.end(), cells.begin(), cells.end());
    }
}

}  // namespace linkdetail

// Adds the model link of a bracket term to an existing link, with fresh pairs
// and every cell carrying the given sign.  Components are merged.
inline void add_rep(SymLink& link, const Term& t, int sign = 1) {
    if (sign != 1 && sign != -1) throw ConfigError("cell sign must be +1 or -1");
    auto build = [&](auto&& self, const Term& u) -> std::map<int, std::vector<Cell>> {
        std::map<int, std::vector<Cell>> out;
        if (u->is_leaf()) {
            link.ext.codim(u->leaf);  // validates the symbol
            out[u->leaf] = {Cell{1, {base_point()}}};
            return out;
        }
        auto left = self(self, u->l);
        auto right = self(self, u->r);
        const int p = link.next_pair++;
        link.pairs[p] = PairInfo{height(u->l, link.ext) - 1, height(u->r, link.ext) - 1,
                                 weight(u) - 1, u};
        std::map<int, std::vector<Cell>> merged;
        for (auto& [sym, cells] : right)
            for (const Cell& c : cells)
                merged[sym].push_back(
                    linkdetail::prefixed(sphere_factor(p, side_a, link.pairs[p].dim_a), c));
        for (auto& [sym, cells] : left)
            for (const Cell& c : cells)
                merged[sym].push_back(
                    linkdetail::prefixed(sphere_factor(p, side_b, link.pairs[p].dim_b), c));
        return merged;
    };
    auto comps = build(build, t);
    if (sign < 0)
        for (auto& [sym, cells] : comps)
            for (Cell& c : cells) c.sign = -c.sign;
    linkdetail::merge_comps(link.comps, std::move(comps));
}

inline SymLink rep(const Term& t, const ExtendedSignature& ext) {
    SymLink link;
    link.ext = ext;
    link.ambient_h = height(t, ext);
    add_rep(link, t);
    check_link(link);
    return link;
}

// The bracket chain on (i, i, ..., i, j) with w leaves in total, nested to
// the right; w = 1 gives the bare j leaf.
inline Term chain_word(int i, int j, int w) {
    if (w < 1) throw ConfigError("chain length must be at least 1");
    Term t = atom(j);
    for (int s = 1; s < w; ++s) t = br(atom(i), t);
    return t;
}

// Cells of the model link of chain_word(i, j, w), with pairs drawn fresh from
// the given link's allocator and registered there.  The closed form matches
// the recursive construction of add_rep on the same word.
inline std::map<int, std::vector<Cell>> embed_chain(SymLink& link, int i, int j, int w) {
    std::map<int, std::vector<Cell>> out;
    if (w < 1) throw ConfigError("chain length must be at least 1");
    if (w == 1) {
        link.ext.codim(j);
        out[j] = {Cell{1, {base_point()}}};
        return out;
    }
    const int ki = link.ext.codim(i);
    const int kj = link.ext.codim(j);
    std::vector<int> pid(w, -1);
    for (int lam = 1; lam < w; ++lam) {
        const int p = link.next_pair++;
        pid[lam] = p;
        link.pairs[p] = PairInfo{ki - 1, (lam - 1) * (ki - 1) + kj - 1, lam,
                                 chain_word(i, j, lam + 1)};
    }
    for (int lam = 1; lam < w; ++lam) {
        Cell c{1, {}};
        for (int mu = w - 1; mu > lam; --mu)
            c.fs.push_back(sphere_factor(pid[mu], side_a, link.pairs[pid[mu]].dim_a));
        c.fs.push_back(sphere_factor(pid[lam], side_b, link.pairs[pid[lam]].dim_b));
        out[i].push_back(c);
    }
    Cell cj{1, {}};
    for (int mu = w - 1; mu >= 1; --mu)
        cj.fs.push_back(sphere_factor(pid[mu], side_a, link.pairs[pid[mu]].dim_a));
    out[j].push_back(cj);
    return out;
}

inline SymLink rep_chain(int i, int j, int w, const ExtendedSignature& ext) {
    SymLink link;
    link.ext = ext;
    link.ambient_h = height(chain_word(i, j, w), ext);
    linkdetail::merge_comps(link.comps, embed_chain(link, i, j, w));
    check_link(link);
    return link;
}

// A sum of model links: one independent copy (fresh pairs) per unit of each
// coefficient.  Only plain markers are representable.  The ambient height is
// tracked only if all terms agree on it.
inline SymLink link_of_expr(const LieExpr& e, const ExtendedSignature& ext) {
    SymLink link;
    link.ext = ext;
    std::optional<int> common_h;
    bool uniform = true;
    for (const auto& [key, coeff] : e.terms) {
        if (key.second != static_cast<int>(Marker::plain))
            throw ConfigError("only plain bracket terms have a model link");
        const int h = height(key.first, ext);
        if (!common_h)
            common_h = h;
        else if (*common_h != h)
            uniform = false;
        const int sgn = coeff < 0 ? -1 : 1;
        Coeff n = coeff < 0 ? -coeff : coeff;
        for (Coeff c = 0; c < n; ++c) add_rep(link, key.first, sgn);
    }
    if (uniform && common_h) link.ambient_h = *common_h;
    check_link(link);
    return link;
}

inline std::vector<Cell> shift_copy(const std::vector<Cell>& cells) {
    std::vector<Cell> out = cells;
    for (Cell& c : out)
        for (Factor& f : c.fs) ++f.shift;
    return out;
}

// ---------------------------------------------------------------------------
// Transverse intersection of cells
// ---------------------------------------------------------------------------

namespace linkdetail {

inline bool has_sphere(const std::vector<Factor>& fs) {
    for (const Factor& f : fs)
        if (f.sphere) return true;
    return false;
}

inline int sphere_count(const std::vector<Factor>& fs) {
    int n = 0;
    for (const Factor& f : fs) n += f.sphere ? 1 : 0;
    return n;
}

inline std::vector<Factor> drop_base_points(const std::vector<Factor>& fs) {
    std::vector<Factor> out;
    out.reserve(fs.size());
    for (const Factor& f : fs)
        if (f.sphere || f.pair >= 0) out.push_back(f);
    return out;
}

inline std::vector<Factor> rest_of(const std::vector<Factor>& fs) {
    return std::vector<Factor>(fs.begin() + 1, fs.end());
}

// The factor list of the intersection of a cell of the active component (ja)
// with the membrane spanned by a cell of the passive component (ia), or
// nothing when the two are disjoint in general position.
inline std::optional<std::vector<Factor>> meet(const std::vector<Factor>& ja,
                                               const std::vector<Factor>& ia) {
    if (!has_sphere(ja) || !has_sphere(ia)) return std::nullopt;
    const Factor& lj = ja.front();
    const Factor& li = ia.front();
    auto descend = [&](const Factor& keep) -> std::optional<std::vector<Factor>> {
        auto sub = meet(rest_of(ja), rest_of(ia));
        if (!sub) return std::nullopt;
        std::vector<Factor> out;
        out.reserve(sub->size() + 1);
        out.push_back(keep);
        out.insert(out.end(), sub->begin(), sub->end());
        return out;
    };
    if (lj.sphere && li.sphere) {
        if (lj.pair != li.pair) return std::nullopt;  // unlinked pairs split off
        if (lj.side == li.side) return descend(lj);   // parallel spheres: pass through
        // Opposite sides of one pair meet transversally in a single point,
        // provided the passive cell has no further sphere direction left.
        if (sphere_count(ia) != 1) return std::nullopt;
        std::vector<Factor> out;
        out.reserve(ja.size());
        out.push_back(freed_point(lj.pair, lj.side, lj.shift + 1));
        out.insert(out.end(), ja.begin() + 1, ja.end());
        return out;
    }
    if (lj.sphere && !li.sphere) {
        if (li.pair == lj.pair && li.side == lj.side) return descend(li);
        return std::nullopt;
    }
    if (!lj.sphere && li.sphere) {
        if (lj.pair == li.pair && lj.side == li.side) return descend(lj);
        return std::nullopt;
    }
    if (lj.pair == li.pair && lj.side == li.side) return descend(lj);
    return std::nullopt;
}

}  // namespace linkdetail

inline std::optional<Cell> tau_pair(const Cell& cj, const Cell& ci) {
    auto out = linkdetail::meet(linkdetail::drop_base_points(cj.fs),
                                linkdetail::drop_base_points(ci.fs));
    if (!out) return std::nullopt;
    return Cell{cj.sign * ci.sign, std::move(*out)};
}

// Removes +/- pairs of cells with identical factor lists.
inline std::vector<Cell> cancel_exact(const std::vector<Cell>& cells) {
    std::map<std::vector<Factor>, long long> net;
    for (const Cell& c : cells) net[c.fs] += c.sign;
    std::vector<Cell> out;
    for (const auto& [fs, n] : net) {
        const int sgn = n < 0 ? -1 : 1;
        for (long long k = 0; k < (n < 0 ? -n : n); ++k) out.push_back(Cell{sgn, fs});
    }
    return out;
}

inline std::vector<Cell> tau_cells(const std::vector<Cell>& active,
                                   const std::vector<Cell>& passive) {
    std::vector<Cell> out;
    for (const Cell& cj : active)
        for (const Cell& ci : passive)
            if (auto z = tau_pair(cj, ci)) out.push_back(std::move(*z));
    return cancel_exact(out);
}

inline std::vector<Cell> tau_eval(const SymLink& link, int j, int i) {
    if (j == i) throw ConfigError("intersection requires two distinct components");
    link.ext.codim(j);
    link.ext.codim(i);
    auto itj = link.comps.find(j);
    auto iti = link.comps.find(i);
    static const std::vector<Cell> none;
    return tau_cells(itj == link.comps.end() ? none : itj->second,
                     iti == link.comps.end() ? none : iti->second);
}

// Records the intersection as a fresh component.  Returns the symbol used.
inline int tau_append(SymLink& link, int j, int i, int new_symbol = -1) {
    std::vector<Cell> z = tau_eval(link, j, i);
    if (new_symbol < 0) new_symbol = static_cast<int>(link.ext.k.size()) + 1;
    const int codim = link.ext.codim(i) + link.ext.codim(j) - 1;
    link.ext.add_symbol(new_symbol, codim);
    link.ext.provenance[new_symbol] =
        ExtendedSignature::Provenance{j, i, br(atom(i), atom(j))};
    link.comps[new_symbol] = std::move(z);
    check_link(link);
    return new_symbol;
}

// ---------------------------------------------------------------------------
// Class extraction
// ---------------------------------------------------------------------------

using Core = std::vector<std::tuple<int, int, int>>;  // (dim, pair, side) of spheres

inline Core cell_core(const Cell& c) {
    Core core;
    for (const Factor& f : c.fs)
        if (f.sphere) core.emplace_back(f.dim, f.pair, f.side);
    return core;
}

namespace linkdetail {

struct JudgedCell {
    int comp = 0;
    Cell cell;
};

// Drops every cell that carries a sphere of a pair with a missing side,
// iterating until no further pair dies.
inline std::vector<JudgedCell> surviving_cells(std::vector<JudgedCell> judged) {
    for (;;) {
        std::map<int, std::pair<bool, bool>> sides;
        for (const JudgedCell& jc : judged)
            for (const Factor& f : jc.cell.fs)
                if (f.sphere) {
                    if (f.side == side_a)
                        sides[f.pair].first = true;
                    else
                        sides[f.pair].second = true;
                }
        auto dead = [&](const Factor& f) {
            if (!f.sphere) return false;
            const auto& s = sides[f.pair];
            return !(s.first && s.second);
        };
        std::vector<JudgedCell> kept;
        for (const JudgedCell& jc : judged) {
            bool drop = false;
            for (const Factor& f : jc.cell.fs)
                if (dead(f)) {
                    drop = true;
                    break;
                }
            if (!drop) kept.push_back(jc);
        }
        if (kept.size() == judged.size()) return kept;
        judged = std::move(kept);
    }
}

// Rebuilds the bracket term whose model link produced the given cores.  Every
// recognised part must reduce to a single base cell naming a component, and
// pair dimensions must match the heights of the parts they join.
inline Term rebuild_template(const SymLink& link,
                             const std::vector<std::pair<int, Core>>& cells,
                             std::set<int>& used_pairs) {
    if (cells.empty()) throw CalculusError("unrecognized link class: empty part");
    bool any_empty = false, all_empty = true;
    for (const auto& [comp, core] : cells) {
        if (core.empty())
            any_empty = true;
        else
            all_empty = false;
    }
    if (all_empty) {
        if (cells.size() != 1)
            throw CalculusError("unrecognized link class: ambiguous base part");
        return atom(cells[0].first);
    }
    if (any_empty) throw CalculusError("unrecognized link class: ragged part depths");
    const int p = std::get<1>(cells[0].second[0]);
    if (!used_pairs.insert(p).second)
        throw CalculusError("unrecognized link class: pair joins two template positions");
    std::vector<std::pair<int, Core>> a_part, b_part;
    for (const auto& [comp, core] : cells) {
        if (std::get<1>(core[0]) != p)
            throw CalculusError("unrecognized link class: no common outer pair");
        Core rest(core.begin() + 1, core.end());
        if (std::get<2>(core[0]) == side_a)
            a_part.emplace_back(comp, std::move(rest));
        else
            b_part.emplace_back(comp, std::move(rest));
    }
    if (a_part.empty() || b_part.empty())
        throw CalculusError("unrecognized link class: one-sided pair");
    Term alpha = rebuild_template(link, b_part, used_pairs);
    Term beta = rebuild_template(link, a_part, used_pairs);
    const PairInfo& pi = link.pairs.at(p);
    if (pi.dim_a != height(alpha, link.ext) - 1 || pi.dim_b != height(beta, link.ext) - 1)
        throw CalculusError("unrecognized link class: pair dimensions do not match parts");
    return br(alpha, beta);
}

struct CellClasses {
    Coeff unit = 0;       // net count of base cells, when not keyed by component
    LieExpr classes;
};

// Reads the judged cells off as a signed sum of classes.  Base (all-point)
// cells count toward the unit tally when key_unit_by_comp is false and toward
// the component's own symbol otherwise.
inline CellClasses read_cells(const SymLink& link, std::vector<JudgedCell> judged,
                              bool key_unit_by_comp) {
    CellClasses out;
    judged = surviving_cells(std::move(judged));
    // Base cells.
    std::vector<JudgedCell> withspheres;
    for (const JudgedCell& jc : judged) {
        if (jc.cell.all_points()) {
            if (key_unit_by_comp)
                out.classes.add(atom(jc.comp), Marker::plain, jc.cell.sign);
            else
                out.unit += jc.cell.sign;
        } else {
            withspheres.push_back(jc);
        }
    }
    // Group the rest by pair connectivity.
    std::map<int, int> root;  // union-find over pairs
    auto find = [&](int x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
    };
    for (const JudgedCell& jc : withspheres)
        for (const Factor& f : jc.cell.fs)
            if (f.sphere && !root.count(f.pair)) root[f.pair] = f.pair;
    for (const JudgedCell& jc : withspheres) {
        int first = -1;
        for (const Factor& f : jc.cell.fs)
            if (f.sphere) {
                if (first < 0)
                    first = find(f.pair);
                else
                    root[find(f.pair)] = first;
            }
    }
    std::map<int, std::vector<const JudgedCell*>> groups;
    for (const JudgedCell& jc : withspheres) {
        for (const Factor& f : jc.cell.fs)
            if (f.sphere) {
                groups[find(f.pair)].push_back(&jc);
                break;
            }
    }
    for (const auto& [gid, members] : groups) {
        // Net multiplicity per distinct cell; all must agree.
        std::map<std::pair<int, std::vector<Factor>>, Coeff> net;
        for (const JudgedCell* jc : members)
            net[{jc->comp, jc->cell.fs}] += jc->cell.sign;
        std::optional<Coeff> mult;
        std::vector<std::pair<int, Core>> distinct;
        std::set<std::pair<int, Core>> seen;
        for (const auto& [key, n] : net) {
            if (n == 0) continue;
            if (!mult)
                mult = n;
            else if (*mult != n)
                throw CalculusError("unrecognized link class: mixed multiplicities");
            Core core;
            for (const Factor& f : key.second)
                if (f.sphere) core.emplace_back(f.dim, f.pair, f.side);
            auto ck = std::make_pair(key.first, core);
            if (!seen.insert(ck).second)
                throw CalculusError("unrecognized link class: duplicate cell shape");
            distinct.emplace_back(key.first, std::move(core));
        }
        if (!mult) continue;  // the whole group cancelled
        std::set<int> used;
        Term t = rebuild_template(link, distinct, used);
        if (!t->is_leaf() && struct_eq(t->l, t->r))
            out.classes.add(t->l, Marker::square, *mult);
        else
            out.classes.add(t, Marker::plain, *mult);
    }
    refresh_square_flags(out.classes, link.ext);
    return out;
}

}  // namespace linkdetail

// Recognises the whole link as a signed sum of model links.  Base cells read
// as the unit of their own component's symbol.
inline LieExpr extract(const SymLink& link) {
    std::vector<linkdetail::JudgedCell> judged;
    for (const auto& [sym, cells] : link.comps)
        for (const Cell& c : cells) judged.push_back({sym, c});
    return linkdetail::read_cells(link, std::move(judged), true).classes;
}

// Intersection followed by projection onto the fresh component: the recorded
// cells are judged on their own, away from the rest of the link.
inline LieExpr tau_p(const SymLink& link, int j, int i, int new_symbol = -1) {
    SymLink work = link;
    const int sym = tau_append(work, j, i, new_symbol);
    std::vector<linkdetail::JudgedCell> judged;
    for (const Cell& c : work.comps[sym]) judged.push_back({sym, c});
    return linkdetail::read_cells(work, std::move(judged), true).classes;
}

struct MuResult {
    Coeff unit = 0;
    LieExpr classes;
};

// Left-to-right fold of intersections along a word of symbols, starting from
// component 1.  When a fold would intersect a component with itself, the
// passive side is taken as a parallel copy.
inline MuResult iterate_mu(const SymLink& link, const std::vector<int>& word) {
    auto comp_cells = [&](int sym) -> std::vector<Cell> {
        auto it = link.comps.find(sym);
        return it == link.comps.end() ? std::vector<Cell>{} : it->second;
    };
    link.ext.codim(1);
    std::vector<Cell> acc = comp_cells(1);
    int last = 1;
    for (int sym : word) {
        link.ext.codim(sym);
        std::vector<Cell> active = comp_cells(sym);
        std::vector<Cell> passive =
            std::multiset<Cell>(active.begin(), active.end()) ==
                    std::multiset<Cell>(acc.begin(), acc.end())
                ? shift_copy(acc)
                : acc;
        acc = tau_cells(active, passive);
        last = sym;
    }
    std::vector<linkdetail::JudgedCell> judged;
    for (const Cell& c : acc) judged.push_back({last, c});
    auto read = linkdetail::read_cells(link, std::move(judged), false);
    return MuResult{read.unit, read.classes};
}

// ---------------------------------------------------------------------------
// Corrective surgery
// ---------------------------------------------------------------------------

struct ZChain {
    std::vector<Cell> chain;  // the iterated passive side, after w-2 folds
    std::vector<Cell> z;      // the active component against the chain
    std::vector<int> z_eps;   // per z cell: orientation of the active cell behind it
};

inline ZChain compute_Z(const SymLink& link, int j, int i, int w) {
    if (w < 2) throw ConfigError("surgery weight must be at least 2");
    if (j == i) throw ConfigError("surgery requires two distinct components");
    auto comp_cells = [&](int sym) -> std::vector<Cell> {
        link.ext.codim(sym);
        auto it = link.comps.find(sym);
        return it == link.comps.end() ? std::vector<Cell>{} : it->second;
    };
    std::vector<Cell> mi = comp_cells(i);
    std::vector<Cell> acc = w == 2 ? mi : shift_copy(mi);
    for (int step = 0; step < w - 2; ++step) acc = tau_cells(mi, acc);
    ZChain out;
    // The final fold is done by hand to remember, for each intersection cell,
    // the orientation of the active cell that produced it.  Surgery must
    // cancel against that orientation; the intersection sign alone (a product
    // of two orientations) cannot tell a negated copy from a plain one.
    std::map<std::pair<std::vector<Factor>, int>, long long> net;
    for (const Cell& cj : comp_cells(j))
        for (const Cell& ci : acc)
            if (auto c = tau_pair(cj, ci)) net[{c->fs, cj.sign}] += c->sign;
    for (const auto& [key, n] : net) {
        const int sgn = n < 0 ? -1 : 1;
        for (long long k = 0; k < (n < 0 ? -n : n); ++k) {
            out.z.push_back(Cell{sgn, key.first});
            out.z_eps.push_back(key.second);
        }
    }
    out.chain = std::move(acc);
    return out;
}

namespace linkdetail {

// One candidate of the cancellation pass: a positive and a negative cell in
// the same component whose cores agree up to a relabelling of pairs.  The
// relabelling must extend to a perfect sign-reversing matching of every cell
// that touches a relabelled pair.
inline bool try_cancel(SymLink& link, int comp, std::size_t xi, std::size_t yi) {
    const Cell& x = link.comps[comp][xi];
    const Cell& y = link.comps[comp][yi];
    const Core cx = cell_core(x);
    const Core cy = cell_core(y);
    if (cx.size() != cy.size()) return false;
    std::map<int, int> sigma;
    std::map<int, int> rsigma;
    for (std::size_t n = 0; n < cx.size(); ++n) {
        auto [dx, px, sx] = cx[n];
        auto [dy, py, sy] = cy[n];
        if (dx != dy || sx != sy) return false;
        auto it = sigma.find(px);
        if (it != sigma.end()) {
            if (it->second != py) return false;
        } else {
            sigma[px] = py;
        }
        auto rt = rsigma.find(py);
        if (rt != rsigma.end()) {
            if (rt->second != px) return false;
        } else {
            rsigma[py] = px;
        }
    }
    std::set<int> dom, img;
    for (const auto& [p, q] : sigma)
        if (p != q) {
            dom.insert(p);
            img.insert(q);
        }
    for (int p : dom)
        if (img.count(p)) return false;
    if (dom.empty()) {
        // Identical cores with no relabelling: cancel only exact duplicates.
        if (x.fs != y.fs) return false;
        auto& cells = link.comps[comp];
        cells.erase(cells.begin() + std::max(xi, yi));
        cells.erase(cells.begin() + std::min(xi, yi));
        return true;
    }
    auto touches = [&](const Cell& c, const std::set<int>& which) {
        for (const Factor& f : c.fs)
            if (f.sphere && which.count(f.pair)) return true;
        return false;
    };
    // Gather every cell touching a relabelled pair, on either side.
    struct Ref {
        int comp;
        std::size_t idx;
    };
    std::vector<Ref> dside, iside;
    for (auto& [sym, cells] : link.comps) {
        for (std::size_t n = 0; n < cells.size(); ++n) {
            const bool td = touches(cells[n], dom);
            const bool ti = touches(cells[n], img);
            if (td && ti) return false;
            if (td) dside.push_back({sym, n});
            if (ti) iside.push_back({sym, n});
        }
    }
    if (dside.size() != iside.size()) return false;
    auto mapped_key = [&](const Cell& c, bool apply) {
        Core core;
        for (const Factor& f : c.fs)
            if (f.sphere) {
                int p = f.pair;
                if (apply) {
                    auto it = sigma.find(p);
                    if (it != sigma.end()) p = it->second;
                }
                core.emplace_back(f.dim, p, f.side);
            }
        return core;
    };
    std::map<std::tuple<int, Core, int>, int> want;  // (comp, core, sign) multiset
    for (const Ref& r : dside) {
        const Cell& c = link.comps[r.comp][r.idx];
        ++want[{r.comp, mapped_key(c, true), -c.sign}];
    }
    for (const Ref& r : iside) {
        const Cell& c = link.comps[r.comp][r.idx];
        auto it = want.find({r.comp, mapped_key(c, false), c.sign});
        if (it == want.end() || it->second == 0) return false;
        --it->second;
    }
    for (const auto& [key, n] : want)
        if (n != 0) return false;
    // Delete everything gathered.
    std::map<int, std::set<std::size_t>> doomed;
    for (const Ref& r : dside) doomed[r.comp].insert(r.idx);
    for (const Ref& r : iside) doomed[r.comp].insert(r.idx);
    for (auto& [sym, idxs] : doomed) {
        auto& cells = link.comps[sym];
        for (auto it = idxs.rbegin(); it != idxs.rend(); ++it)
            cells.erase(cells.begin() + *it);
    }
    return true;
}

}  // namespace linkdetail

// Repeatedly erases sign-reversed copies of whole cell families that differ
// only by a relabelling of pairs.
inline void cancel_link(SymLink& link) {
    for (;;) {
        bool changed = false;
        for (auto& [sym, cells] : link.comps) {
            for (std::size_t a = 0; a < cells.size() && !changed; ++a) {
                if (cells[a].sign <= 0) continue;
                for (std::size_t b = 0; b < cells.size() && !changed; ++b) {
                    if (cells[b].sign >= 0) continue;
                    if (linkdetail::try_cancel(link, sym, a, b)) changed = true;
                }
            }
            if (changed) break;
        }
        if (!changed) return;
    }
}

// One corrective surgery at chain weight w: if the active component j still
// meets the w-fold chain of component i, the matched bracket chain between i
// and j is traded for the same chain ending at the fresh symbol.  Returns
// whether the link changed.
inline bool tau_w(SymLink& link, int j, int i, int w, int new_symbol) {
    link.ext.codim(new_symbol);  // the fresh component must be registered
    auto missing = [&](int sym) {
        auto it = link.comps.find(sym);
        return it == link.comps.end() || it->second.empty();
    };
    if (missing(i) || missing(j)) return false;
    ZChain zc = compute_Z(link, j, i, w);
    if (zc.z.empty()) return false;
    for (std::size_t n = 0; n < zc.z.size(); ++n) {
        const Cell& z = zc.z[n];
        const int eps = zc.z_eps[n];
        auto lw = embed_chain(link, i, j, w);
        auto ls = embed_chain(link, i, new_symbol, w - 1);
        auto fuse = [&](std::map<int, std::vector<Cell>>& tpl, int outer_sign) {
            for (auto& [sym, cells] : tpl)
                for (const Cell& c : cells) {
                    Cell fused{outer_sign * eps * c.sign, z.fs};
                    if (!(c.fs.size() == 1 && !c.fs[0].sphere && c.fs[0].pair < 0))
                        fused.fs.insert(fused.fs.end(), c.fs.begin(), c.fs.end());
                    link.comps[sym].push_back(std::move(fused));
                }
        };
        fuse(lw, -1);
        fuse(ls, +1);
    }
    cancel_link(link);
    check_link(link);
    return true;
}

// The full corrective composite: a fresh component for new_symbol, then
// surgeries from chain weight w0 down to 2.
inline void tau_R(SymLink& link, int j, int i, int new_symbol, int w0) {
    if (w0 < 1) throw ConfigError("surgery bound must be at least 1");
    if (j == i) throw ConfigError("surgery requires two distinct components");
    const int codim = link.ext.codim(i) + link.ext.codim(j) - 1;
    link.ext.add_symbol(new_symbol, codim);
    link.ext.provenance[new_symbol] =
        ExtendedSignature::Provenance{j, i, br(atom(i), atom(j))};
    link.comps[new_symbol] = {};
    for (int w = w0; w >= 2; --w) tau_w(link, j, i, w, new_symbol);
    check_link(link);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string render_factor(const Factor& f) {
    auto tag = [&](int side) { return side == side_a ? "a" : "b"; };
    std::string shift = f.shift > 0 ? "'" + std::to_string(f.shift) : "";
    if (f.sphere)
        return "S^" + std::to_string(f.dim) + "_" + std::to_string(f.pair) + tag(f.side) +
               shift;
    if (f.pair < 0) return "pt";
    return "pt_" + std::to_string(f.pair) + tag(f.side) + shift;
}

inline std::string render_cell(const Cell& c) {
    std::string out = c.sign < 0 ? "- " : "+ ";
    for (std::size_t n = 0; n < c.fs.size(); ++n) {
        if (n) out += " x ";
        out += render_factor(c.fs[n]);
    }
    if (c.fs.empty()) out += "1";
    return out;
}

inline std::string render_link(const SymLink& link) {
    std::string out;
    for (const auto& [sym, cells] : link.comps) {
        out += "M_" + std::to_string(sym) + " (codim " +
               std::to_string(link.ext.codim(sym)) + "):";
        if (cells.empty()) out += " empty";
        out += "\n";
        for (const Cell& c : cells) out += "  " + render_cell(c) + "\n";
    }
    return out;
}

}  // namespace hiltonkit
