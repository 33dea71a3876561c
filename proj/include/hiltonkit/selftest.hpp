#pragma once

// End-to-end verification suites, runnable at two scales:
//   * desk scale (fast, for the `selftest` subcommand),
//   * full scale (complete sweeps with wall-clock budgets).
// Each suite checks one externally meaningful property of the engine; the
// final suite confirms that the structural invariant counters saw work and
// recorded no violation while the others ran.

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hiltonkit/basis.hpp"
#include "hiltonkit/lie.hpp"
#include "hiltonkit/linkcalc.hpp"
#include "hiltonkit/order.hpp"
#include "hiltonkit/reduction.hpp"
#include "hiltonkit/splitting.hpp"
#include "hiltonkit/wterm.hpp"

namespace hiltonkit {

struct SuiteOptions {
  bool full = false;            // full sweeps with budgets vs. desk scale
  std::uint64_t seed = 20260814;
  std::string data_dir;         // group annotation data; "" = resolve from env
};

struct SuiteResult {
  int id = 0;
  std::string name;
  std::string status;  // "PASS", "FAIL" or "SKIP"
  std::string detail;  // first failure / skip reason
  double seconds = 0.0;
  double budget = 0.0;  // wall-clock allowance at full scale; 0 = none
};

namespace suitedetail {

struct Check {
  bool ok = true;
  std::string first;
  std::string skip_reason;
  long long count = 0;

  void operator()(bool cond, const std::string& what) {
    ++count;
    if (!cond && ok) {
      ok = false;
      first = what;
    }
  }
  void skip(const std::string& why) { skip_reason = why; }
};

inline std::string show(const Coeff& c) { return c.str(); }

// ---- suite 1: the fixed reduction trace and its per-element pipelines -----

inline void suite_golden_trace(Check& ck, const SuiteOptions&) {
  const Signature sig{{2, 2}, 4};
  const BasisOrder ord = BasisOrder::standard();

  const auto seq4 = build_TS(sig, ord, 4);
  struct Row {
    int j, i, sym, codim;
    const char* text;
  };
  const Row want[] = {{2, 1, 3, 3, "tau^S_{2,1}"},
                      {3, 1, 4, 4, "tau^S_{3,1}"},
                      {3, 2, 5, 4, "tau^S_{3,2}"},
                      {4, 1, 6, 5, "tau^S_{4,1}"}};
  ck(seq4.steps.size() == 4, "first four reductions");
  for (size_t n = 0; n < seq4.steps.size() && n < 4; ++n) {
    const auto& s = seq4.steps[n];
    ck(s.index == (int)n + 1 && s.j == want[n].j && s.i == want[n].i &&
           s.new_symbol == want[n].sym && s.new_codim == want[n].codim,
       "step " + std::to_string(n + 1) + " fields");
    ck(render_step(s) == want[n].text, "step " + std::to_string(n + 1) + " rendering");
  }

  const auto seq = build_TS(sig, ord);
  const std::pair<const char*, const char*> pipes[] = {
      {"[i1,i2]", "p_3 o tau^R_{2,1}"},
      {"[i1,[i1,i2]]", "p_4 o tau^R_{3,1} o tau^R_{2,1}"},
      {"[i2,[i1,i2]]", "p_5 o tau^R_{3,2} o tau^R_{2,1}"},
      {"[i1,[i1,[i1,i2]]]", "p_6 o tau^R_{4,1} o tau^R_{3,1} o tau^R_{2,1}"}};
  for (const auto& [text, want_pipe] : pipes) {
    const std::string got = render_pipeline(hilton_pipeline(parse_term(text), seq));
    ck(got == want_pipe, std::string(text) + " pipeline: got " + got);
  }
}

// ---- suite 2: enumeration sizes against the necklace-count formula --------

inline void suite_witt(Check& ck, const SuiteOptions& opt) {
  const int wmax = opt.full ? 7 : 5;
  const BasisOrder ord = BasisOrder::standard();
  for (int r = 1; r <= 3; ++r) {
    const auto cls = enumerate_basis_by_weight(r, wmax, ord);
    for (int w = 1; w <= wmax; ++w)
      ck((long long)cls[w].size() == witt_rank(r, w),
         "r=" + std::to_string(r) + " w=" + std::to_string(w) + ": " +
             std::to_string(cls[w].size()) + " vs " +
             std::to_string(witt_rank(r, w)));
  }
}

// ---- suite 3: coefficient projection is a delta on basic pairs ------------

inline void suite_delta(Check& ck, const SuiteOptions& opt) {
  const Signature sig{{2, 3}, {}};
  const BasisOrder ord = BasisOrder::standard();
  const int wmax = opt.full ? 4 : 3;
  long long limit = 0;
  for (int w = 2; w <= wmax; ++w) limit += witt_rank(2, w);
  const auto seq = build_TS(sig, ord, (int)limit);
  const auto basics = enumerate_basis(2, wmax, ord);
  for (const Term& gp : basics)
    for (const Term& g : basics) {
      const auto hr = hilton(LieExpr::single(gp), g, seq);
      const Coeff want = struct_eq(gp, g) ? 1 : 0;
      ck(hr.plain == want && hr.square == 0,
         "(" + to_string(gp) + ", " + to_string(g) + ") -> (" + show(hr.plain) +
             ", " + show(hr.square) + ")");
    }
}

// ---- suite 4: chain intersections and the corrective surgery --------------

inline void suite_chain(Check& ck, const SuiteOptions&) {
  const Signature sig{{2, 2}, 4};
  for (int w = 2; w <= 4; ++w) {
    const ExtendedSignature ext = ExtendedSignature::from(sig);
    const SymLink L = rep_chain(1, 2, w, ext);
    const ZChain zc = compute_Z(L, 2, 1, w);

    ck(zc.chain.size() == 1, "w=" + std::to_string(w) + ": one chain cell");
    if (zc.chain.size() == 1) {
      const Cell& c = zc.chain[0];
      int spheres = 0, points = 0;
      bool dims_ok = true;
      for (const Factor& f : c.fs)
        if (f.sphere) {
          ++spheres;
          dims_ok = dims_ok && f.dim == 1;
        } else {
          ++points;
        }
      ck(c.sign == 1 && spheres == 1 && dims_ok && points == w - 2 &&
             (int)c.fs.size() == w - 1,
         "w=" + std::to_string(w) + ": chain is Points^" + std::to_string(w - 2) +
             " x S^1");
    }
    ck(zc.z.size() == 1 && zc.z[0].sign == 1 && zc.z[0].all_points(),
       "w=" + std::to_string(w) + ": intersection is a single positive point cell");

    const ZChain above = compute_Z(L, 2, 1, w + 1);
    ck(above.chain.empty() && above.z.empty(),
       "w=" + std::to_string(w) + ": weight-" + std::to_string(w + 1) +
           " intersection is empty");

    SymLink Lw = rep_chain(1, 2, w, ext);
    tau_R(Lw, 2, 1, 3, 4);
    const LieExpr got = extract(Lw);
    const Term reduced = tau_S(chain_word(1, 2, w), 2, 1, 3);
    ck(struct_eq(reduced, chain_word(1, 3, w - 1)),
       "w=" + std::to_string(w) + ": symbolic image is the shortened chain");
    ck(got.terms.size() == 1 && got.coeff(reduced, Marker::plain) == 1,
       "w=" + std::to_string(w) + ": surgery extracts to " + to_string(reduced));
    const LieExpr via_model = extract(rep(reduced, Lw.ext));
    ck(got.same_terms(via_model),
       "w=" + std::to_string(w) + ": surgery image matches the model link");
  }
}

// ---- suite 5: projected intersections detect exactly the base pair --------

inline void suite_projection(Check& ck, const SuiteOptions& opt) {
  const BasisOrder ord = BasisOrder::standard();
  const std::vector<int> ranks = opt.full ? std::vector<int>{2, 3} : std::vector<int>{2};
  const int wmax = opt.full ? 4 : 3;
  for (int r : ranks) {
    Signature sig;
    sig.k.assign(r, 2);
    const int fresh = r + 1;
    for (const Term& gp : enumerate_basis(r, wmax, ord))
      for (int i = 1; i <= r; ++i)
        for (int j = 1; j <= r; ++j) {
          if (i == j) continue;
          const SymLink L = rep(gp, ExtendedSignature::from(sig));
          LieExpr e;
          try {
            e = tau_p(L, j, i);
          } catch (const CalculusError& ex) {
            ck(false, to_string(gp) + " (" + std::to_string(j) + "," +
                          std::to_string(i) + "): " + ex.what());
            continue;
          }
          const bool hit = !gp->is_leaf() && gp->l->is_leaf() && gp->r->is_leaf() &&
                           ((gp->l->leaf == i && gp->r->leaf == j) ||
                            (gp->l->leaf == j && gp->r->leaf == i));
          const Coeff unit = e.coeff(atom(fresh), Marker::plain);
          ck(hit ? (unit == 1 || unit == -1) : unit == 0,
             to_string(gp) + " (" + std::to_string(j) + "," + std::to_string(i) +
                 "): unit coefficient " + show(unit));
          for (const auto& [key, c] : e.terms)
            if ((Marker)key.second == Marker::plain && !struct_eq(key.first, atom(fresh)))
              ck(c == 0, to_string(gp) + " (" + std::to_string(j) + "," +
                             std::to_string(i) + "): stray class " + to_string(key.first));
        }
  }
}

// ---- suite 6: the direction asymmetry of the projected intersection -------

inline void suite_asymmetry(Check& ck, const SuiteOptions&) {
  const Signature sig{{2, 2}, {}};
  const Term g = parse_term("[i2,[i1,[i1,i2]]]");
  const SymLink L = rep(g, ExtendedSignature::from(sig));
  const LieExpr forward = tau_p(L, 2, 1);
  ck(forward.zero(), "one direction reads zero on the link");

  const BasisOrder ordp = BasisOrder::permuted({2, 1});
  const LieExpr nf =
      normalize(LieExpr::single(g), ordp, ExtendedSignature::from(sig));
  const Term w2 = parse_term("[i2,i1]");
  const Coeff sq = nf.coeff(w2, Marker::square);
  ck(sq == 1 || sq == -1, "reversed direction carries a unit square: " + show(sq));
  ck(nf.coeff(w2, Marker::plain) == 0, "reversed direction has no plain unit");
}

// ---- suite 7: splitting table summaries ------------------------------------

inline void suite_splitting(Check& ck, const SuiteOptions& opt) {
  const std::string dir =
      opt.data_dir.empty() ? locate_data_dir("", nullptr) : opt.data_dir;
  const auto [groups, warn] = load_group_table(dir);
  if (!warn.empty()) {
    if (opt.full)
      ck(false, warn);
    else
      ck.skip(warn);
    return;
  }
  const BasisOrder ord = BasisOrder::standard();
  const std::string s4 = splitting_table(Signature{{2, 2}, 4}, ord, groups).summary();
  ck(s4 == "Z2^3 + Z^2", "m=4: " + s4);
  const std::string s3 = splitting_table(Signature{{2, 2}, 3}, ord, groups).summary();
  ck(s3 == "Z^3", "m=3: " + s3);
}

// ---- suite 8: the link route agrees with the rewrite route -----------------

inline void suite_routes(Check& ck, const SuiteOptions& opt) {
  const Signature sig{{2, 2}, 4};
  const BasisOrder ord = BasisOrder::standard();
  const auto seq = build_TS(sig, ord);
  const auto basics = enumerate_basis(2, 4, ord);
  const int w0 = splitting_weight_bound(sig);

  auto fold = [&](SymLink& link) {
    for (const auto& s : seq.steps) tau_R(link, s.j, s.i, s.new_symbol, w0);
  };

  std::vector<int> final_symbol;
  std::vector<int> route_sign;
  for (const Term& g : basics) {
    const int fs = hilton_pipeline(g, seq).final_symbol;
    SymLink link = rep(g, ExtendedSignature::from(sig));
    fold(link);
    const LieExpr e = extract(link);
    const Coeff c = e.coeff(atom(fs), Marker::plain);
    ck(c == 1 || c == -1, to_string(g) + ": unit coefficient, got " + show(c));
    for (const auto& [key, cc] : e.terms)
      if ((Marker)key.second == Marker::plain && !struct_eq(key.first, atom(fs)))
        ck(cc == 0, to_string(g) + ": stray class " + to_string(key.first));
    const auto hr = hilton(LieExpr::single(g), g, seq);
    ck(hr.plain == 1 && hr.square == 0, to_string(g) + ": rewrite route unit");
    final_symbol.push_back(fs);
    route_sign.push_back(c < 0 ? -1 : 1);
  }

  const int trials = opt.full ? 50 : 6;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> dist(-3, 3);
  for (int n = 0; n < trials; ++n) {
    LieExpr expr;
    for (const Term& g : basics) expr.add(g, Marker::plain, dist(rng));
    SymLink link = link_of_expr(expr, ExtendedSignature::from(sig));
    fold(link);
    const LieExpr e = extract(link);
    for (size_t b = 0; b < basics.size(); ++b) {
      const Coeff via_link = e.coeff(atom(final_symbol[b]), Marker::plain);
      const Coeff via_rewrite = hilton(expr, basics[b], seq).plain;
      ck(via_link == route_sign[b] * via_rewrite,
         "trial " + std::to_string(n) + ", " + to_string(basics[b]) + ": link " +
             show(via_link) + " vs rewrite " + show(via_rewrite));
    }
  }
}

// ---- suite 9: strategies agree and normalization is idempotent -------------

inline void suite_confluence(Check& ck, const SuiteOptions& opt) {
  const int trials = opt.full ? 100 : 20;
  const BasisOrder ord = BasisOrder::standard();
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);

  std::function<Term(int, int)> rand_tree = [&](int w, int r) -> Term {
    if (w == 1) return atom(std::uniform_int_distribution<int>(1, r)(rng));
    const int wl = std::uniform_int_distribution<int>(1, w - 1)(rng);
    return br(rand_tree(wl, r), rand_tree(w - wl, r));
  };

  const Strategy strategies[] = {Strategy::innermost_leftmost,
                                 Strategy::outermost_rightmost,
                                 Strategy::seeded_random, Strategy::recursive};
  for (int n = 0; n < trials; ++n) {
    const int r = std::uniform_int_distribution<int>(1, 3)(rng);
    const int w = std::uniform_int_distribution<int>(1, 5)(rng);
    Signature sig;
    for (int s = 0; s < r; ++s)
      sig.k.push_back(std::uniform_int_distribution<int>(2, 3)(rng));
    const ExtendedSignature ext = ExtendedSignature::from(sig);
    const Term t = rand_tree(w, r);
    const LieExpr input = LieExpr::single(t);

    std::vector<LieExpr> results;
    for (Strategy s : strategies) {
      NormalizeOptions o;
      o.strategy = s;
      o.seed = opt.seed + 1000003ULL * (std::uint64_t)n;
      try {
        results.push_back(normalize(input, ord, ext, o));
      } catch (const std::exception& ex) {
        ck(false, "trial " + std::to_string(n) + " " + to_string(t) + " [" +
                      strategy_name(s) + "]: " + ex.what());
      }
    }
    if (results.size() != std::size(strategies)) continue;
    for (size_t s = 1; s < results.size(); ++s)
      ck(results[0].same_terms(results[s]) &&
             results[0].two_torsion == results[s].two_torsion &&
             results[0].possibly_zero == results[s].possibly_zero,
         "trial " + std::to_string(n) + " " + to_string(t) + ": " +
             strategy_name(strategies[s]) + " disagrees with " +
             strategy_name(strategies[0]));
    const LieExpr again = normalize(results[0], ord, ext);
    ck(again.same_terms(results[0]),
       "trial " + std::to_string(n) + " " + to_string(t) + ": not idempotent");
  }
}

}  // namespace suitedetail

// Runs every suite and appends the invariant-counter verdict.  Budgets are
// enforced only at full scale.
inline std::vector<SuiteResult> run_suites(const SuiteOptions& opt) {
  using Body = std::function<void(suitedetail::Check&, const SuiteOptions&)>;
  struct Def {
    int id;
    const char* name;
    double budget;
    Body body;
  };
  const Def defs[] = {
      {1, "golden reduction trace and pipelines", 1.0, suitedetail::suite_golden_trace},
      {2, "basis counts match the necklace formula", 5.0, suitedetail::suite_witt},
      {3, "coefficient projection is a delta on basic pairs", 5.0,
       suitedetail::suite_delta},
      {4, "chain intersections and corrective surgery", 5.0, suitedetail::suite_chain},
      {5, "projected intersections detect exactly the base pair", 30.0,
       suitedetail::suite_projection},
      {6, "direction asymmetry of the projected intersection", 1.0,
       suitedetail::suite_asymmetry},
      {7, "splitting table summaries", 1.0, suitedetail::suite_splitting},
      {8, "link route agrees with the rewrite route", 60.0, suitedetail::suite_routes},
      {9, "strategies agree and normalization is idempotent", 30.0,
       suitedetail::suite_confluence},
  };

  const std::uint64_t checks0 = invariant_checks().load();

  std::vector<SuiteResult> out;
  for (const Def& def : defs) {
    suitedetail::Check ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      def.body(ck, opt);
    } catch (const std::exception& ex) {
      ck(false, std::string("unhandled: ") + ex.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.id = def.id;
    r.name = def.name;
    r.seconds = std::chrono::duration<double>(t1 - t0).count();
    r.budget = def.budget;
    if (!ck.skip_reason.empty()) {
      r.status = "SKIP";
      r.detail = ck.skip_reason;
    } else if (!ck.ok) {
      r.status = "FAIL";
      r.detail = ck.first;
    } else if (opt.full && def.budget > 0 && r.seconds > def.budget) {
      r.status = "FAIL";
      std::ostringstream os;
      os << "exceeded the " << def.budget << "s budget";
      r.detail = os.str();
    } else {
      r.status = "PASS";
    }
    out.push_back(std::move(r));
  }

  SuiteResult inv;
  inv.id = 10;
  inv.name = "structural invariants hold throughout";
  inv.budget = 0.0;
  const std::uint64_t checks1 = invariant_checks().load();
  const std::uint64_t viol = invariant_violations().load();
  if (checks1 <= checks0) {
    inv.status = "FAIL";
    inv.detail = "no invariant checks were exercised";
  } else if (viol != 0) {
    inv.status = "FAIL";
    inv.detail = std::to_string(viol) + " violation(s) recorded";
  } else {
    inv.status = "PASS";
    inv.detail = std::to_string(checks1 - checks0) + " checks, 0 violations";
  }
  out.push_back(std::move(inv));
  return out;
}

inline bool all_passed(const std::vector<SuiteResult>& rs) {
  for (const auto& r : rs)
    if (r.status == "FAIL") return false;
  return true;
}

inline std::string render_suite_line(const SuiteResult& r) {
  std::ostringstream os;
  os << r.status << "  criterion " << r.id << "  " << r.name;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "  (" << r.seconds << "s";
  if (r.budget > 0) os << " / " << r.budget << "s";
  os << ")";
  if (r.status != "PASS" && !r.detail.empty()) os << ": " << r.detail;
  if (r.status == "PASS" && r.id == 10) os << ": " << r.detail;
  return os.str();
}

}  // namespace hiltonkit
