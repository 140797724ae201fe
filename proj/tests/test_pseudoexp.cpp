#include <catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "sosgap/pseudoexp.hpp"
#include "sosgap/reduce.hpp"

using namespace sosgap;
using Catch::Matchers::WithinAbs;

namespace {

XorInstance single_clause() {
  XorInstance inst;
  inst.n = 3;
  inst.clauses.push_back({{0, 1, 2}, 1});
  return inst;
}

MultilinearPoly random_poly(int n, int deg, Rng& rng) {
  MultilinearPoly p(n);
  for (const auto& m : monomials_up_to(n, deg))
    if (uniform_below(rng, 3) == 0) p.add_term(m, Rational(static_cast<std::int64_t>(uniform_below(rng, 11)) - 5, 3));
  return p;
}

std::vector<std::vector<int>> solutions(const XorInstance& inst) {
  std::vector<std::vector<int>> out;
  for (const auto& x : oracle::all_assignments(inst.n))
    if (oracle::satisfied(inst, x) == inst.m()) out.push_back(x);
  return out;
}

}  // namespace

TEST_CASE("multilinear polynomials reduce x_i^2 = 1 and drop zero terms", "[poly]") {
  auto x0 = MultilinearPoly::variable(3, 0), x1 = MultilinearPoly::variable(3, 1);
  auto sq = x0 * x0;
  CHECK(sq == MultilinearPoly(3, Rational(1)));
  auto p = (x0 + x1) * (x0 - x1);
  CHECK(p.size() == 0);
  CHECK(p.degree() <= 0);
  MultilinearPoly q(3);
  q.add_term(Monomial{0, 2}, 2);
  q.add_term(Monomial{0, 2}, -2);
  CHECK(q.size() == 0);
  CHECK_THROWS(q.add_term(Monomial{3}, 1));
  auto r = MultilinearPoly::monomial(3, Monomial{0, 1, 2}, Rational(1, 2));
  CHECK(r.eval({1, -1, -1}) == Rational(1, 2));
  CHECK(r.degree() == 3);
}

TEST_CASE("interpolate reproduces the table on the cube", "[poly]") {
  Rng rng(3);
  std::vector<Rational> vals(8);
  for (auto& v : vals) v = Rational(static_cast<std::int64_t>(uniform_below(rng, 7)) - 3);
  auto p = interpolate(5, {1, 3, 4}, vals);
  for (unsigned t = 0; t < 8; ++t) {
    std::vector<int> x(5, 1);
    x[1] = (t & 1) ? -1 : 1;
    x[3] = (t & 2) ? -1 : 1;
    x[4] = (t & 4) ? -1 : 1;
    CHECK(p.eval(x) == vals[t]);
  }
}

TEST_CASE("polynomial products match pointwise evaluation", "[poly][property]") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    auto f = random_poly(5, 3, rng), g = random_poly(5, 3, rng);
    auto fg = f * g;
    for (const auto& x : oracle::all_assignments(5)) CHECK(fg.eval(x) == f.eval(x) * g.eval(x));
  }
}

TEST_CASE("Grigoriev pe on a single clause", "[pseudoexp]") {
  auto inst = single_clause();
  auto pe = grigoriev_pe(inst, 3);
  CHECK(pe.at(Monomial{}) == 1);
  CHECK(pe.at(Monomial{0, 1, 2}) == 1);
  CHECK(pe.at(Monomial{0}) == 0);
  CHECK(pe_eval(pe, xor_objective(inst)) == 1);
  CHECK(pe_eval(pe, MultilinearPoly(3, Rational(1))) == 1);
}

TEST_CASE("Grigoriev pe at full width is the uniform distribution on solutions", "[pseudoexp][oracle]") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto inst = gen_3xor(8, 5, GenMode::Planted, s);
    auto pe = grigoriev_pe(inst, inst.n);
    auto sols = solutions(inst);
    REQUIRE_FALSE(sols.empty());
    for (const auto& m : monomials_up_to(inst.n, inst.n)) {
      double expect = oracle::moment(sols, m.indices());
      CHECK(to_double(pe.at(m)) == expect);
    }
  }
}

TEST_CASE("Grigoriev pe is perfectly satisfying, +-1/0 valued and PSD", "[pseudoexp][property]") {
  for (std::uint64_t s = 1; s <= 8; ++s) {
    auto inst = gen_3xor(10, 12, GenMode::Linear, s);
    auto d = max_grigoriev_degree(inst, 4);
    REQUIRE(d.has_value());
    auto pe = grigoriev_pe(inst, *d);
    auto closure = gf2_closure(inst, *d);
    std::set<std::vector<int>> sets;
    for (const auto& e : closure.equations) sets.insert(e.indices());
    for (const auto& [m, v] : pe.table()) {
      CHECK((v == 1 || v == -1));
      if (!m.empty()) CHECK(sets.count(m.indices()) == 1);
    }
    auto rep = check_pe(pe, xor_constraints(inst));
    CHECK(rep.normalization_residual == 0);
    CHECK(rep.max_constraint_residual == 0);
    CHECK(rep.min_eig() >= -1e-9);
    CHECK(rep.valid());
    CHECK(pe_eval(pe, xor_objective(inst)) == 1);
  }
}

TEST_CASE("Grigoriev pe at degree 4 on random n=10, m=14 instances is PSD", "[pseudoexp]") {
  int checked = 0;
  for (std::uint64_t s = 1; s <= 40 && checked < 5; ++s) {
    auto inst = gen_3xor(10, 14, GenMode::Random, s);
    if (gf2_closure(inst, 4).contradiction) continue;
    auto pe = grigoriev_pe(inst, 4);
    auto mm = moment_matrix(pe, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mm.entries, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-9);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("contradictory width raises DegreeTooHigh with the bisected degree", "[pseudoexp]") {
  auto inst = gen_3xor(15, 10, GenMode::Petersen, 1);
  try {
    grigoriev_pe(inst, 6);
    FAIL("expected DegreeTooHigh");
  } catch (const DegreeTooHigh& e) {
    REQUIRE(e.largest_valid().has_value());
    CHECK(*e.largest_valid() == 4);
  }
  CHECK(max_grigoriev_degree(inst, 10) == std::optional<int>(4));
}

TEST_CASE("moment matrices of true distributions", "[pseudoexp]") {
  auto pe = point_mass({1, -1, 1, -1});
  auto m0 = moment_matrix(pe, 0);
  CHECK(m0.entries.rows() == 1);
  CHECK(m0.entries(0, 0) == 1.0);
  auto m2 = moment_matrix(pe, 4);
  Eigen::VectorXd v(m2.index.size());
  for (std::size_t a = 0; a < m2.index.size(); ++a) {
    int p = 1;
    for (int i : m2.index[a]) p *= std::vector<int>{1, -1, 1, -1}[i];
    v(a) = p;
  }
  CHECK((m2.entries - v * v.transpose()).norm() == 0.0);
  CHECK_THROWS_AS(moment_matrix(point_mass({1, 1, 1}, 2), 4), DegreeError);

  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::vector<int>> pts;
    std::vector<Rational> w;
    const int k = 1 + static_cast<int>(uniform_below(rng, 6));
    for (int i = 0; i < k; ++i) {
      std::vector<int> x(6);
      for (auto& e : x) e = random_sign(rng);
      pts.push_back(x);
      w.push_back(Rational(1, k));
    }
    auto dpe = distribution_pe(pts, w);
    CHECK(min_eigenvalue(moment_matrix(dpe, 6).entries) >= -1e-10);
  }
}

TEST_CASE("check_pe reports residuals and flags perturbations", "[pseudoexp]") {
  auto pe = point_mass({1, -1, 1});
  auto rep = check_pe(pe, {});
  CHECK(rep.normalization_residual == 0);
  CHECK(rep.max_constraint_residual == 0);
  CHECK(std::abs(rep.min_eig()) <= 1e-12);
  CHECK(rep.valid());

  auto bad = pe;
  bad.set(Monomial{0, 1}, pe.at(Monomial{0, 1}) + Rational(1, 2));
  auto rb = check_pe(bad, {});
  CHECK(rb.min_eig() < -1e-3);
  CHECK_FALSE(rb.valid());
  CHECK_FALSE(rb.first_violation.empty());

  auto inst = single_clause();
  auto g = grigoriev_pe(inst, 3);
  g.set(Monomial{0, 1, 2}, -1);
  auto rc = check_pe(g, xor_constraints(inst));
  CHECK(rc.max_constraint_residual == 1);
}

TEST_CASE("pe_eval is linear and matches brute force on point masses", "[pseudoexp][property]") {
  CHECK(pe_eval(point_mass({1, 1, 1}), MultilinearPoly(3, Rational(1))) == 1);
  Rng rng(12);
  auto pe = grigoriev_pe(gen_3xor(7, 4, GenMode::Planted, 3), 4);
  for (int t = 0; t < 20; ++t) {
    auto f = random_poly(7, 4, rng), g = random_poly(7, 4, rng);
    Rational a(static_cast<std::int64_t>(uniform_below(rng, 9)) - 4, 7), b(3, 5);
    auto comb = f * a;
    comb += g * b;
    CHECK(pe_eval(pe, comb) == a * pe_eval(pe, f) + b * pe_eval(pe, g));
  }
  CHECK_THROWS_AS(pe_eval(pe, MultilinearPoly::monomial(7, Monomial{0, 1, 2, 3, 4})), DegreeError);

  auto inst = gen_3xor(9, 20, GenMode::Random, 6);
  auto opt = brute_force_opt(inst);
  CHECK(pe_eval(point_mass(opt.witness), xor_objective(inst)) == opt.value);
}

TEST_CASE("complete valid pes on few variables are distributions", "[pseudoexp][property]") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto inst = gen_3xor(4, 2, GenMode::Planted, s);
    auto pe = grigoriev_pe(inst, 4);
    REQUIRE(check_pe(pe, xor_constraints(inst)).valid());
    auto p = reconstruct_distribution(pe);
    Rational total(0);
    for (const auto& v : p) {
      CHECK(to_double(v) >= -1e-9);
      total += v;
    }
    CHECK(total == 1);
  }
}

TEST_CASE("pushforward: identity, degree scaling and composition", "[pseudoexp]") {
  auto pe = grigoriev_pe(gen_3xor(6, 3, GenMode::Planted, 2), 5);
  std::vector<MultilinearPoly> id;
  for (int i = 0; i < 6; ++i) id.push_back(MultilinearPoly::variable(6, i));
  auto same = pushforward(pe, id);
  CHECK(same.degree() == 5);
  for (const auto& m : monomials_up_to(6, 5)) CHECK(same.at(m) == pe.at(m));

  // Degree-2 components halve the degree budget.
  std::vector<MultilinearPoly> quad;
  for (int i = 0; i < 5; ++i) quad.push_back(MultilinearPoly::monomial(6, Monomial{i, i + 1}));
  auto q = pushforward(pe, quad);
  CHECK(q.degree() == 2);
  CHECK_THROWS_AS(pushforward(pe, quad, 3), DegreeError);

  // Composing maps of degrees 1 and 2 equals pushing through the composite.
  std::vector<MultilinearPoly> flip;
  for (int i = 0; i < 6; ++i) flip.push_back(MultilinearPoly::variable(6, 5 - i, i % 2 ? -1 : 1));
  std::vector<MultilinearPoly> composite;
  for (const auto& p : quad) composite.push_back(p.compose(flip, 6));
  auto two_step = pushforward(pushforward(pe, flip), quad);
  auto one_step = pushforward(pe, composite, 5 / 2);
  for (const auto& m : monomials_up_to(5, 2)) CHECK(two_step.at(m) == one_step.at(m));
}

TEST_CASE("pushforward of a point mass is the point mass of the image", "[pseudoexp][oracle]") {
  Rng rng(5);
  std::vector<int> x(5);
  for (auto& v : x) v = random_sign(rng);
  std::vector<MultilinearPoly> map;
  map.push_back(MultilinearPoly::monomial(5, Monomial{0, 1, 2}));
  map.push_back(MultilinearPoly::variable(5, 3, -1));
  map.push_back(MultilinearPoly::monomial(5, Monomial{1, 4}));
  auto out = pushforward(point_mass(x), map, 3);
  std::vector<int> y;
  for (const auto& p : map) y.push_back(static_cast<int>(p.eval(x).numerator()));
  auto expect = point_mass(y);
  for (const auto& m : monomials_up_to(3, 3)) CHECK(out.at(m) == expect.at(m));
}

TEST_CASE("pe JSON round-trips exactly", "[pseudoexp]") {
  auto pe = distribution_pe({{1, -1, 1}, {-1, -1, 1}, {1, 1, 1}}, {Rational(1, 3), Rational(1, 6), Rational(1, 2)});
  auto j = to_json(pe);
  auto back = pe_from_json(j);
  CHECK(back.degree() == pe.degree());
  for (const auto& m : monomials_up_to(3, 3)) CHECK(back.at(m) == pe.at(m));
  nlohmann::json bad = j;
  bad["table"].push_back({{2, 1}, 1});
  CHECK_THROWS(pe_from_json(bad));
}
