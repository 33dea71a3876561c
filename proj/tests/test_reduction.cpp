#include <catch2/catch_amalgamated.hpp>

#include "hiltonkit/reduction.hpp"

using namespace hiltonkit;

static Term T(const std::string& s) { return parse_term(s); }
static const Signature SIG22{{2, 2}, 4};

TEST_CASE("single symbolic collapse") {
  CHECK(to_string(tau_S(T("[i1,i2]"), 2, 1, 3)) == "i3");
  CHECK(to_string(tau_S(T("[i2,i1]"), 2, 1, 3)) == "i3");  // both orientations
  CHECK(to_string(tau_S(T("[i2,[i1,i2]]"), 2, 1, 3)) == "[i2,i3]");
  CHECK(to_string(tau_S(T("[[i1,i2],[i1,i2]]"), 2, 1, 3)) == "[i3,i3]");
  CHECK(to_string(tau_S(T("[i1,[i1,i2]]"), 3, 2, 4)) == "[i1,[i1,i2]]");  // no match
  CHECK_THROWS_AS(tau_S(T("[i3,[i1,i2]]"), 2, 1, 3), ConfigError);
}

TEST_CASE("full sequence for two generators in ambient dimension 4") {
  auto seq = build_TS(SIG22, BasisOrder::standard());
  REQUIRE(seq.steps.size() == 6);
  // (j, i, new symbol, new codim)
  std::vector<std::array<int, 4>> expect = {
      {2, 1, 3, 3}, {3, 1, 4, 4}, {3, 2, 5, 4},
      {4, 1, 6, 5}, {4, 2, 7, 5}, {5, 2, 8, 5}};
  std::vector<std::string> gammas = {
      "[i1,i2]",          "[i1,[i1,i2]]",      "[i2,[i1,i2]]",
      "[i1,[i1,[i1,i2]]]", "[i2,[i1,[i1,i2]]]", "[i2,[i2,[i1,i2]]]"};
  for (size_t n = 0; n < expect.size(); ++n) {
    CHECK(seq.steps[n].j == expect[n][0]);
    CHECK(seq.steps[n].i == expect[n][1]);
    CHECK(seq.steps[n].new_symbol == expect[n][2]);
    CHECK(seq.steps[n].new_codim == expect[n][3]);
    CHECK(to_string(seq.steps[n].gamma) == gammas[n]);
    CHECK(seq.steps[n].index == (int)n + 1);
  }
  CHECK(render_step(seq.steps[0]) == "tau^S_{2,1}");
  CHECK(render_step(seq.steps[5]) == "tau^S_{5,2}");
  CHECK(seq.ext.codim(8) == 5);
  CHECK(to_string(seq.ext.provenance.at(6).gamma) == "[i1,[i1,[i1,i2]]]");
}

TEST_CASE("four-step prefix") {
  auto seq = build_TS(SIG22, BasisOrder::standard(), 4);
  REQUIRE(seq.steps.size() == 4);
  CHECK(render_step(seq.steps[0]) == "tau^S_{2,1}");
  CHECK(render_step(seq.steps[1]) == "tau^S_{3,1}");
  CHECK(render_step(seq.steps[2]) == "tau^S_{3,2}");
  CHECK(render_step(seq.steps[3]) == "tau^S_{4,1}");
  CHECK(seq.steps[3].new_symbol == 6);
  CHECK(seq.steps[3].new_codim == 5);
}

TEST_CASE("empty and degenerate sequences") {
  CHECK(build_TS(SIG22, BasisOrder::standard(), 0).steps.empty());
  // One generator admits no composites at all.
  CHECK(build_TS(Signature{{4, 4}, 2}, BasisOrder::standard()).steps.empty());
  CHECK(build_TS(Signature{{2}, 3}, BasisOrder::standard()).steps.empty());
}

TEST_CASE("prefix application") {
  auto seq = build_TS(SIG22, BasisOrder::standard());
  CHECK(to_string(apply_prefix(seq, 0, T("[i2,[i1,i2]]"))) == "[i2,[i1,i2]]");
  CHECK(to_string(apply_prefix(seq, 2, T("[i2,[i1,i2]]"))) == "[i2,i3]");
  CHECK(to_string(apply_prefix(seq, 6, T("[i1,[i1,[i1,i2]]]"))) == "i6");
  CHECK_THROWS_AS(apply_prefix(seq, 7, T("i1")), ConfigError);
}

TEST_CASE("projection pipelines for every basic product through weight 4") {
  auto seq = build_TS(SIG22, BasisOrder::standard());
  struct Expect {
    std::string gamma, rendering;
    int final_symbol;
  };
  std::vector<Expect> table = {
      {"i1", "p_1", 1},
      {"i2", "p_2", 2},
      {"[i1,i2]", "p_3 o tau^R_{2,1}", 3},
      {"[i1,[i1,i2]]", "p_4 o tau^R_{3,1} o tau^R_{2,1}", 4},
      {"[i2,[i1,i2]]", "p_5 o tau^R_{3,2} o tau^R_{2,1}", 5},
      {"[i1,[i1,[i1,i2]]]", "p_6 o tau^R_{4,1} o tau^R_{3,1} o tau^R_{2,1}", 6},
      {"[i2,[i1,[i1,i2]]]", "p_7 o tau^R_{4,2} o tau^R_{3,1} o tau^R_{2,1}", 7},
      {"[i2,[i2,[i1,i2]]]", "p_8 o tau^R_{5,2} o tau^R_{3,2} o tau^R_{2,1}", 8},
  };
  for (const auto& e : table) {
    Term g = T(e.gamma);
    Pipeline p = hilton_pipeline(g, seq);
    INFO(e.gamma);
    CHECK(render_pipeline(p) == e.rendering);
    CHECK(p.final_symbol == e.final_symbol);
    CHECK((int)p.steps.size() == weight(g) - 1);
  }
  CHECK_THROWS_AS(hilton_pipeline(T("[i2,i1]"), seq), ConfigError);
}

TEST_CASE("repeated subterms collapse in one step") {
  auto seq = build_TS(SIG22, BasisOrder::standard(), 12);
  REQUIRE(seq.steps.size() == 12);
  // The left-heavy weight-5 product reaches weight 2 after two steps.
  const auto& s9 = seq.steps[8];
  CHECK(s9.j == 4);
  CHECK(s9.i == 3);
  CHECK(s9.new_symbol == 11);
  CHECK(s9.new_codim == 6);
  CHECK(to_string(s9.gamma) == "[[i1,i2],[i1,[i1,i2]]]");

  Pipeline p = hilton_pipeline(T("[[i1,i2],[i1,[i1,i2]]]"), seq);
  CHECK(render_pipeline(p) == "p_11 o tau^R_{4,3} o tau^R_{3,1} o tau^R_{2,1}");
  CHECK(p.steps.size() == 3);  // shorter than weight - 1 = 4
}

TEST_CASE("sequence over a flipped generator order") {
  auto seq = build_TS(Signature{{2, 2}, std::nullopt}, BasisOrder::permuted({2, 1}), 3);
  REQUIRE(seq.steps.size() == 3);
  CHECK(to_string(seq.steps[0].gamma) == "[i2,i1]");
  CHECK(seq.steps[0].j == 2);
  CHECK(seq.steps[0].i == 1);
  CHECK(to_string(seq.steps[1].gamma) == "[i2,[i2,i1]]");
  CHECK(seq.steps[1].j == 3);
  CHECK(seq.steps[1].i == 2);
  CHECK(to_string(seq.steps[2].gamma) == "[i1,[i2,i1]]");
  CHECK(seq.steps[2].j == 3);
  CHECK(seq.steps[2].i == 1);
  Pipeline p = hilton_pipeline(T("[i1,[i2,i1]]"), seq);
  CHECK(render_pipeline(p) == "p_5 o tau^R_{3,1} o tau^R_{2,1}");
}

TEST_CASE("sequence from a repaired precedence list") {
  std::vector<Term> in = {
      T("i1"), T("i2"), T("[i1,i2]"), T("[i1,[i1,i2]]"), T("[i2,[i1,i2]]"),
      T("[i2,[i2,[i1,i2]]]"), T("[i2,[i1,[i1,i2]]]"), T("[i1,[i1,[i1,i2]]]")};
  auto seq = build_TS_gamma(Signature{{2, 2}, std::nullopt}, in, 6);
  REQUIRE(seq.steps.size() == 6);
  // The free weight-4 element moved to the front of its class, renaming
  // the weight-4 symbols relative to the default order.
  CHECK(to_string(seq.steps[3].gamma) == "[i2,[i2,[i1,i2]]]");
  CHECK(seq.steps[3].j == 5);
  CHECK(seq.steps[3].i == 2);
  CHECK(seq.steps[3].new_symbol == 6);
  CHECK(to_string(seq.steps[4].gamma) == "[i1,[i1,[i1,i2]]]");
  CHECK(seq.steps[4].j == 4);
  CHECK(seq.steps[4].i == 1);
  CHECK(seq.steps[4].new_symbol == 7);
  CHECK(to_string(seq.steps[5].gamma) == "[i2,[i1,[i1,i2]]]");
  CHECK(seq.steps[5].j == 4);
  CHECK(seq.steps[5].i == 2);
  CHECK(seq.steps[5].new_symbol == 8);
  CHECK(hilton_pipeline(T("[i2,[i2,[i1,i2]]]"), seq).final_symbol == 6);
}

TEST_CASE("incompatible order is rejected") {
  BasisOrder bad;
  bad.explicit_pos[to_string(T("i1"))] = 0;
  bad.explicit_pos[to_string(T("i2"))] = 1;
  bad.explicit_pos[to_string(T("[i1,[i1,i2]]"))] = 2;  // before its prerequisite
  bad.explicit_pos[to_string(T("[i1,i2]"))] = 3;
  CHECK_THROWS_AS(build_TS(Signature{{2, 2}, std::nullopt}, bad, 2), ConfigError);
}

TEST_CASE("coefficient projection carries its pipeline") {
  auto seq = build_TS(SIG22, BasisOrder::standard());
  Term g = T("[i1,[i1,[i1,i2]]]");
  HiltonResult own = hilton(LieExpr::single(g), g, seq);
  CHECK(own.plain == 1);
  CHECK(own.square == 0);
  CHECK(render_pipeline(own.pipeline) == "p_6 o tau^R_{4,1} o tau^R_{3,1} o tau^R_{2,1}");
  HiltonResult other = hilton(LieExpr::single(T("[i1,i2]")), g, seq);
  CHECK(other.plain == 0);
  CHECK(other.square == 0);
  LieExpr combo = parse_lie_expr("3*[i1,[i1,[i1,i2]]] - [i1,i2]");
  CHECK(hilton(combo, g, seq).plain == 3);
}

TEST_CASE("sequence replay preserves heights") {
  auto seq = build_TS(SIG22, BasisOrder::standard());
  for (const auto& step : seq.steps) {
    Term before = apply_prefix(seq, step.index - 1, step.gamma);
    CHECK(height(before, seq.ext) == step.new_codim);
    CHECK(height(step.gamma, seq.ext) == step.new_codim);
  }
}

TEST_CASE("created symbols are distinct and cover the sequence") {
  auto seq = build_TS(SIG22, BasisOrder::standard(), 12);
  std::set<int> syms;
  for (const auto& s : seq.steps) syms.insert(s.new_symbol);
  CHECK(syms.size() == seq.steps.size());
  CHECK(*syms.begin() == 3);
  CHECK(*syms.rbegin() == 14);
}
