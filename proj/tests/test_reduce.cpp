#include <catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "sosgap/pseudoexp.hpp"
#include "sosgap/reduce.hpp"

using namespace sosgap;

namespace {

XorInstance single_clause(int rhs) {
  XorInstance inst;
  inst.n = 3;
  inst.clauses.push_back({{0, 1, 2}, rhs});
  return inst;
}

std::array<int, 3> pattern(unsigned bits) {
  return {(bits & 4) ? 1 : -1, (bits & 2) ? 1 : -1, (bits & 1) ? 1 : -1};
}

}  // namespace

TEST_CASE("one source clause becomes three 2-out-of-4 clauses on seven variables", "[reduce]") {
  auto [csp, emb] = xor_to_2oo4(single_clause(1));
  CHECK(csp.nvars == 7);
  CHECK(csp.m() == 3);
  CHECK(csp.parity_bit == 6);
  for (const auto& c : csp.clauses) {
    CHECK(c.kind == ClauseKind::TwoOutOfFour);
    CHECK(c.lits.size() == 4);
    CHECK(c.touches(csp.parity_bit));
  }
  CHECK(emb.kappa() == 1);
  CHECK(emb.components.size() == 7);
  CHECK(cube_embedding(single_clause(1)).kappa() == 3);
}

TEST_CASE("gadget dummies: three clauses on satisfying patterns, exactly two otherwise", "[reduce][oracle]") {
  for (int rhs : {1, -1})
    for (unsigned bits = 0; bits < 8; ++bits) {
      auto p = pattern(bits);
      const bool sat = p[0] * p[1] * p[2] == rhs;
      // Exhaustive best response over the eight dummy triples.
      int best = 0;
      for (unsigned d = 0; d < 8; ++d) best = std::max(best, detail::gadget_satisfied(p, pattern(d), rhs));
      CHECK(best == (sat ? 3 : 2));
      CHECK(detail::gadget_satisfied(p, detail::dummy_values(p, rhs), rhs) == best);
      if (sat) {
        const bool all_a = p[0] == rhs && p[1] == rhs && p[2] == rhs;
        auto d = detail::dummy_values(p, rhs);
        if (all_a) CHECK(d == std::array<int, 3>{-rhs, -rhs, -rhs});
        else CHECK(d == p);
      }
    }
}

TEST_CASE("embedded assignments satisfy (2m + sat) / 3m of the gadget", "[reduce][property]") {
  auto inst = gen_3xor(8, 12, GenMode::Random, 4);
  auto [csp, emb] = xor_to_2oo4(inst);
  auto cube = cube_embedding(inst);
  for (const auto& x : oracle::all_assignments(inst.n)) {
    auto y = embed_assignment(inst, x);
    const int sat = oracle::satisfied(inst, x);
    CHECK(csp_eval(csp, y) == Rational(2 * inst.m() + sat, 3 * inst.m()));
    auto cy = cube.apply(x);
    for (int v = 0; v < csp.nvars; ++v) CHECK(cy[v] == y[v]);
    if (sat == inst.m()) {
      auto ay = emb.apply(x);
      for (int v = 0; v < csp.nvars; ++v) CHECK(ay[v] == y[v]);
    }
  }
}

TEST_CASE("clause indicators agree with the satisfaction oracle", "[reduce][oracle]") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    CspClause c{ClauseKind::TwoOutOfFour, {}};
    for (int v = 0; v < 4; ++v) c.lits.push_back({v, random_sign(rng)});
    CspClause e{ClauseKind::Eq, {{0, random_sign(rng)}, {3, random_sign(rng)}}};
    auto pc = clause_indicator(c, 4), pe = clause_indicator(e, 4);
    MultilinearPoly lsum(4);
    for (const auto& l : c.lits) lsum.add_term(Monomial{l.var}, l.sign);
    for (const auto& y : oracle::all_assignments(4)) {
      CHECK(pc.eval(y) == (oracle::clause_ok(c, y) ? 1 : 0));
      CHECK(pe.eval(y) == (oracle::clause_ok(e, y) ? 1 : 0));
      CHECK(c.satisfied(y) == oracle::clause_ok(c, y));
      CHECK((lsum.eval(y) == 0) == oracle::clause_ok(c, y));
    }
  }
}

TEST_CASE("expanderize bounds occurrences and ties copies by certified expanders", "[reduce]") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    auto inst = gen_3xor(10, 20, GenMode::Random, s);
    auto gadget = xor_to_2oo4(inst).first;
    auto exp = expanderize(gadget, s);
    for (int o : exp.occurrences()) CHECK(o <= 4);
    CHECK(exp.origin.size() == static_cast<std::size_t>(exp.nvars));
    auto occ = gadget.occurrences();
    int split = 0;
    for (int v = 0; v < gadget.nvars; ++v) split += occ[v] > 4;
    CHECK(static_cast<int>(exp.copy_groups.size()) == split);
    for (const auto& g : exp.copy_groups) {
      CHECK(static_cast<int>(g.size()) == occ[exp.origin[g[0]]]);
      for (int v : g) CHECK(exp.origin[v] == exp.origin[g[0]]);
    }
    int eq = 0;
    for (const auto& c : exp.clauses) eq += c.kind == ClauseKind::Eq;
    CHECK(exp.m() == gadget.m() + eq);
    CHECK(to_json(exp) == to_json(expanderize(gadget, s)));
  }
}

TEST_CASE("certified cubic graphs", "[reduce]") {
  Rng rng(6);
  for (int t : {5, 6, 9, 30}) {
    auto g = certified_cubic_graph(t, rng);
    std::vector<int> deg(t, 0);
    for (auto [a, b] : g.edges) {
      CHECK(a < b);
      ++deg[a];
      ++deg[b];
    }
    for (int v = 0; v < t; ++v) CHECK(deg[v] == ((t % 2 && v == t - 1) ? 2 : 3));
    CHECK(is_connected(g));
    CHECK(second_eigenvalue_modulus(g) <= 2.9);
  }
  CHECK_THROWS_AS(certified_cubic_graph(4, rng), GenerationError);
}

TEST_CASE("csp_opt matches the exhaustive oracle and frozen optima", "[reduce][oracle]") {
  struct Case {
    int n, m;
    std::uint64_t seed;
    Rational opt, gadget;
  };
  // Frozen from the exhaustive oracles.
  for (const auto& k : {Case{4, 3, 1, Rational(2, 3), Rational(8, 9)}, Case{4, 4, 1, Rational(3, 4), Rational(11, 12)},
                        Case{4, 5, 1, Rational(4, 5), Rational(14, 15)}, Case{6, 3, 1, Rational(2, 3), Rational(8, 9)}}) {
    auto inst = gen_3xor(k.n, k.m, GenMode::Random, k.seed);
    CHECK(brute_force_opt(inst).value == k.opt);
    auto gadget = xor_to_2oo4(inst).first;
    auto o = csp_opt(gadget);
    CHECK(o.value == k.gadget);
    CHECK(csp_eval(gadget, o.witness) == o.value);
    CHECK(oracle::csp_max(gadget) == k.gadget);
    CHECK(k.gadget == 1 - (1 - k.opt) / 3);
  }
  auto inst = gen_3xor(4, 3, GenMode::Random, 1);
  auto exp = expanderize(xor_to_2oo4(inst).first, 1);
  CHECK(exp.nvars == 22);
  CHECK(csp_opt(exp).value == Rational(21, 22));
  CHECK(oracle::csp_max(exp) == Rational(21, 22));
}

TEST_CASE("perfect completeness is preserved in both directions", "[reduce][property]") {
  for (std::uint64_t s = 1; s <= 12; ++s) {
    auto inst = gen_3xor(5, 3 + static_cast<int>(s % 4 / 2), s % 2 ? GenMode::Planted : GenMode::Random, s);
    auto opt = brute_force_opt(inst);
    auto gadget = xor_to_2oo4(inst).first;
    auto exp = expanderize(gadget, s);
    auto g = csp_opt(gadget), e = csp_opt(exp);
    CHECK((opt.value == 1) == (g.value == 1));
    CHECK((opt.value == 1) == (e.value == 1));
    if (opt.value == 1) CHECK(csp_eval(exp, lift_to_expanded(exp, embed_assignment(inst, opt.witness))) == 1);
    auto rep = soundness_probe(inst, gadget, exp);
    CHECK(rep.gadget_sound);
    CHECK(rep.expanded_sound);
    CHECK(rep.opt_gadget == 1 - rep.delta / 3);
  }
}

TEST_CASE("pushed Grigoriev pe satisfies every CSP constraint exactly", "[reduce][pseudoexp]") {
  auto inst = gen_3xor(10, 12, GenMode::Planted, 2);
  auto d = max_grigoriev_degree(inst, 4);
  REQUIRE(d == std::optional<int>(4));
  auto pe = grigoriev_pe(inst, 4);
  auto [csp, emb] = xor_to_2oo4(inst);
  auto pushed = pushforward(pe, emb.components);
  CHECK(pushed.degree() == 4);
  auto rep = check_pe(pushed, csp_constraints(csp));
  CHECK(rep.max_constraint_residual == 0);
  CHECK(rep.valid());
  auto lits = check_pe(pushed, literal_sum_constraints(csp), CheckOptions{6000, false});
  CHECK(lits.max_constraint_residual == 0);
  CHECK(pe_eval(pushed, csp_to_poly(csp)) == 1);

  auto exp = expanderize(csp, 2);
  auto lifted = pushforward(pe, lift_embedding(exp, emb).components);
  auto er = check_pe(lifted, csp_constraints(exp), CheckOptions{6000, false});
  CHECK(er.max_constraint_residual == 0);
  CHECK(pe_eval(lifted, csp_to_poly(exp)) == 1);

  auto cube = pushforward(pe, cube_embedding(inst).components);
  CHECK(cube.degree() == 1);
}

TEST_CASE("CSP JSON round-trips and rejects malformed input", "[reduce]") {
  auto csp = expanderize(xor_to_2oo4(gen_3xor(6, 8, GenMode::Random, 3)).first, 3);
  auto j = to_json(csp);
  CHECK(to_json(csp_from_json(j)) == j);
  auto bad = j;
  bad["clauses"][0]["kind"] = "3oo5";
  CHECK_THROWS_AS(csp_from_json(bad), InvalidInstance);
  bad = j;
  bad["clauses"][0]["lits"].erase(0);
  CHECK_THROWS_AS(csp_from_json(bad), InvalidInstance);
  bad = j;
  bad.erase("nvars");
  CHECK_THROWS_AS(csp_from_json(bad), InvalidInstance);
}
