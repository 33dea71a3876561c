#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hiltonkit/lie.hpp"

using namespace hiltonkit;

static Term T(const std::string& s) { return parse_term(s); }
static ExtendedSignature ext(std::vector<int> k) {
  return ExtendedSignature::from(Signature{std::move(k), std::nullopt});
}

TEST_CASE("graded swap sign follows the height product") {
  CHECK(render_lie_expr(graded_swap(T("[i1,i2]"), ext({2, 2}))) == "[i2,i1]");
  CHECK(render_lie_expr(graded_swap(T("[i1,i2]"), ext({2, 3}))) == "[i2,i1]");
  CHECK(render_lie_expr(graded_swap(T("[i1,i2]"), ext({3, 3}))) == "-[i2,i1]");
  CHECK(render_lie_expr(graded_swap(T("[i1,i2]"), ext({2, 4}))) == "[i2,i1]");
  CHECK(render_lie_expr(graded_swap(T("[i1,[i1,i2]]"), ext({3, 3}))) == "-[[i1,i2],i1]");
  CHECK_THROWS_AS(graded_swap(T("i1"), ext({2})), ConfigError);
}

TEST_CASE("double swap is the identity") {
  auto e = ext({2, 3, 5});
  for (auto s : {"[i1,i2]", "[i2,i3]", "[[i1,i2],i3]"}) {
    Term t = T(s);
    LieExpr once = graded_swap(t, e);
    const auto& [k, c] = *once.terms.begin();
    // The reverse swap carries the same sign, so the composite is c*c = +1.
    LieExpr twice = graded_swap(k.first, e);
    CHECK(twice.coeff(t, Marker::plain) == c);
    CHECK(c * c == 1);
  }
}

TEST_CASE("expansion against the right child: fixed coefficients") {
  LieExpr even = jacobi_expand(T("[i1,[i2,i3]]"), ext({2, 2, 2}));
  CHECK(even.coeff(T("[[i1,i2],i3]"), Marker::plain) == -1);
  CHECK(even.coeff(T("[i2,[i1,i3]]"), Marker::plain) == -1);

  LieExpr odd = jacobi_expand(T("[i1,[i2,i3]]"), ext({3, 3, 3}));
  CHECK(odd.coeff(T("[[i1,i2],i3]"), Marker::plain) == 1);
  CHECK(odd.coeff(T("[i2,[i1,i3]]"), Marker::plain) == 1);

  LieExpr mixed = jacobi_expand(T("[i1,[i2,i3]]"), ext({2, 3, 2}));
  // p=2, q=3: c1 = (-1)^3 = -1, c2 = (-1)^(6+2+3+1) = +1.
  CHECK(mixed.coeff(T("[[i1,i2],i3]"), Marker::plain) == -1);
  CHECK(mixed.coeff(T("[i2,[i1,i3]]"), Marker::plain) == 1);

  CHECK_THROWS_AS(jacobi_expand(T("[i1,i2]"), ext({2, 2})), ConfigError);
  CHECK_THROWS_AS(jacobi_expand(T("i1"), ext({2})), ConfigError);
}

TEST_CASE("square formation and its annotations") {
  LieExpr s1 = square_reduce(T("[[i1,i2],[i1,i2]]"), ext({2, 2}));
  CHECK(s1.coeff(T("[i1,i2]"), Marker::square) == 1);
  CHECK(s1.terms.size() == 1);
  CHECK(s1.two_torsion.empty());                     // height 3 is odd
  CHECK(s1.possibly_zero.count("[i1,i2]") == 1);     // height 3

  LieExpr s2 = square_reduce(T("[[i1,i2],[i1,i2]]"), ext({2, 3}));
  CHECK(s2.two_torsion.count("[i1,i2]") == 1);       // height 4 is even
  CHECK(s2.possibly_zero.empty());

  LieExpr s3 = square_reduce(T("[i1,i1]"), ext({2, 2}));
  CHECK(s3.coeff(T("i1"), Marker::square) == 1);
  CHECK(s3.two_torsion.count("i1") == 1);            // height 2 is even

  CHECK_THROWS_AS(square_reduce(T("[i1,i2]"), ext({2, 2})), ConfigError);
}

TEST_CASE("normalize: basic products are fixed points") {
  BasisOrder ord;
  auto e22 = ext({2, 2});
  for (auto s : {"i1", "[i1,i2]", "[i2,[i1,i2]]", "[i2,[i2,[i1,i2]]]"}) {
    LieExpr n = normalize(LieExpr::single(T(s)), ord, e22);
    CHECK(render_lie_expr(n) == s);
  }
}

TEST_CASE("normalize: descending pair swaps with its sign") {
  BasisOrder ord;
  CHECK(render_lie_expr(normalize(LieExpr::single(T("[i2,i1]")), ord, ext({2, 2}))) ==
        "[i1,i2]");
  CHECK(render_lie_expr(normalize(LieExpr::single(T("[i2,i1]")), ord, ext({3, 3}))) ==
        "-[i1,i2]");
}

TEST_CASE("normalize: bracket against a diagonal") {
  BasisOrder ord;
  CHECK(render_lie_expr(normalize(LieExpr::single(T("[i1,[i2,i2]]")), ord,
                                  ext({2, 2}))) == "-2*[i2,[i1,i2]]");
  // With odd heights the two expansion pieces cancel outright.
  CHECK(normalize(LieExpr::single(T("[i1,[i2,i2]]")), ord, ext({3, 3})).zero());
  CHECK(render_lie_expr(normalize(LieExpr::single(T("[i2,[i1,i1]]")), ord,
                                  ext({2, 2}))) == "-2*[i1,[i1,i2]]");
  CHECK(render_lie_expr(normalize(LieExpr::single(T("[i1,[i2,i1]]")), ord,
                                  ext({2, 2}))) == "[i1,[i1,i2]]");
}

TEST_CASE("normalize: self-torsion shapes vanish") {
  BasisOrder ord;
  auto e = ext({2, 2});
  CHECK(normalize(LieExpr::single(T("[i1,[i1,i1]]")), ord, e).zero());
  CHECK(normalize(LieExpr::single(T("[[i1,i1],i1]")), ord, e).zero());
  CHECK(normalize(LieExpr::single(T("[[i1,i1],[i1,i1]]")), ord, e).zero());
  CHECK(normalize(LieExpr::single(T("[i2,[[i1,i1],[i1,i1]]]")), ord, e).zero());
}

TEST_CASE("normalize: root diagonal freezes to a square") {
  BasisOrder ord;
  LieExpr n = normalize(LieExpr::single(T("[[i1,i2],[i1,i2]]")), ord, ext({2, 2}));
  CHECK(render_lie_expr(n) == "sq([i1,i2])");
  CHECK(n.possibly_zero.count("[i1,i2]") == 1);

  // A square of a non-basic base melts and refreezes on the basic base.
  LieExpr in = LieExpr::single(T("[i2,i1]"), Marker::square);
  LieExpr m = normalize(in, ord, ext({2, 2}));
  CHECK(render_lie_expr(m) == "sq([i1,i2])");
}

TEST_CASE("normalize under the flipped generator order") {
  auto prime = BasisOrder::permuted({2, 1});
  auto e = ext({2, 2});

  LieExpr n = normalize(LieExpr::single(T("[i2,[i1,[i1,i2]]]")), prime, e);
  CHECK(n.terms.size() == 2);
  CHECK(n.coeff(T("[i1,[i2,[i2,i1]]]"), Marker::plain) == -1);
  CHECK(n.coeff(T("[i2,i1]"), Marker::square) == -1);
  CHECK(n.possibly_zero.count("[i2,i1]") == 1);
  CHECK(n.two_torsion.empty());

  LieExpr sq = normalize(LieExpr::single(T("[[i1,i2],[i1,i2]]")), prime, e);
  CHECK(render_lie_expr(sq) == "sq([i2,i1])");
}

TEST_CASE("normalize is idempotent and linear") {
  BasisOrder ord;
  auto e = ext({2, 3});
  LieExpr a = LieExpr::single(T("[i2,[i1,[i1,i2]]]"));
  LieExpr b = LieExpr::single(T("[[i2,i1],[i1,i2]]"));
  LieExpr combo;
  combo.add_expr(a, 3);
  combo.add_expr(b, -2);
  LieExpr na = normalize(a, ord, e);
  LieExpr nb = normalize(b, ord, e);
  LieExpr nc = normalize(combo, ord, e);
  LieExpr expect;
  expect.add_expr(na, 3);
  expect.add_expr(nb, -2);
  refresh_square_flags(expect, e);
  CHECK(nc.same_terms(expect));
  CHECK(normalize(nc, ord, e).same_terms(nc));
}

TEST_CASE("normalize satisfies graded antisymmetry") {
  BasisOrder ord;
  auto e = ext({2, 3, 4});
  std::vector<std::string> terms = {"i1", "i2", "[i1,i2]", "[i1,[i1,i2]]", "[i2,i3]"};
  for (auto& sa : terms)
    for (auto& sb : terms) {
      Term a = T(sa), b = T(sb);
      if (struct_eq(a, b)) continue;
      LieExpr diff = LieExpr::single(br(a, b));
      diff.add(br(b, a), Marker::plain, -swap_sign(a, b, e));
      INFO("[" << sa << "," << sb << "]");
      CHECK(normalize(diff, ord, e).zero());
    }
}

static Term random_tree(std::mt19937& rng, int w, int r) {
  if (w == 1) return atom((int)(rng() % r) + 1);
  int wl = 1 + (int)(rng() % (unsigned)(w - 1));
  return br(random_tree(rng, wl, r), random_tree(rng, w - wl, r));
}

TEST_CASE("all rewrite strategies agree on random trees") {
  std::mt19937 rng(20259);
  BasisOrder ord;
  for (int trial = 0; trial < 25; ++trial) {
    int r = 2 + (int)(rng() % 2);
    std::vector<int> k;
    for (int i = 0; i < r; ++i) k.push_back(2 + (int)(rng() % 2));
    auto e = ext(k);
    Term t = random_tree(rng, 2 + (int)(rng() % 4), r);
    LieExpr in = LieExpr::single(t);
    LieExpr base = normalize(in, ord, e, {Strategy::innermost_leftmost});
    INFO("trial " << trial << ": " << to_string(t));
    CHECK(normalize(in, ord, e, {Strategy::outermost_rightmost}).same_terms(base));
    CHECK(normalize(in, ord, e, {Strategy::seeded_random, 17}).same_terms(base));
    CHECK(normalize(in, ord, e, {Strategy::recursive}).same_terms(base));
    CHECK(normalize(base, ord, e).same_terms(base));
  }
}

TEST_CASE("rewrite budget violations raise a defect") {
  BasisOrder ord;
  NormalizeOptions opt;
  opt.budget = 1;
  CHECK_THROWS_AS(
      normalize(LieExpr::single(T("[i2,[i1,[i1,i2]]]")), BasisOrder::permuted({2, 1}),
                ext({2, 2}), opt),
      DefectError);
}

TEST_CASE("coefficient projection onto a basic product") {
  BasisOrder ord;
  auto e = ext({2, 3});
  auto basis = enumerate_basis(2, 4, ord);
  for (auto& g : basis) {
    auto [p, s] = hilton_coefficient(LieExpr::single(g), g, ord, e);
    CHECK(p == 1);
    CHECK(s == 0);
  }
  auto [p, s] = hilton_coefficient(LieExpr::single(T("[i1,[i1,i2]]")), T("[i2,[i1,i2]]"),
                                   ord, e);
  CHECK(p == 0);
  CHECK(s == 0);
  CHECK_THROWS_AS(hilton_coefficient(LieExpr::single(T("i1")), T("[i2,i1]"), ord, e),
                  ConfigError);
}

TEST_CASE("expression text round trip") {
  LieExpr e = parse_lie_expr("3*[i1,i2] - 2*[i2,[i1,i2]] + sq([i1,i2])");
  CHECK(e.coeff(T("[i1,i2]"), Marker::plain) == 3);
  CHECK(e.coeff(T("[i2,[i1,i2]]"), Marker::plain) == -2);
  CHECK(e.coeff(T("[i1,i2]"), Marker::square) == 1);
  CHECK(render_lie_expr(e) == "3*[i1,i2] + sq([i1,i2]) - 2*[i2,[i1,i2]]");
  CHECK(render_lie_expr(parse_lie_expr("-[i1,i2]")) == "-[i1,i2]");
  CHECK(render_lie_expr(parse_lie_expr("2[i1,i2]")) == "2*[i1,i2]");
  CHECK(render_lie_expr(parse_lie_expr("[i1,i2] - [i1,i2]")) == "0");
  CHECK_THROWS_AS(parse_lie_expr(""), ConfigError);
  CHECK_THROWS_AS(parse_lie_expr("3*"), ConfigError);
  CHECK_THROWS_AS(parse_lie_expr("[i1,i2] [i1,i2]"), ConfigError);
}
