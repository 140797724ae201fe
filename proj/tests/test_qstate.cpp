#include <catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "sosgap/qstate.hpp"

using namespace sosgap;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<int> random_x(int n, Rng& rng) {
  std::vector<int> x(n);
  for (auto& v : x) v = random_sign(rng);
  return x;
}

int rank_of(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  int r = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r += es.eigenvalues()(i) > 1e-9;
  return r;
}

}  // namespace

TEST_CASE("honest witnesses are unit vectors with product inner products", "[qstate][oracle]") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + static_cast<int>(uniform_below(rng, 5)), c = 1 + static_cast<int>(uniform_below(rng, 3));
    auto x = random_x(n, rng), y = random_x(n, rng);
    auto px = honest_witness(x, c), py = honest_witness(y, c);
    CHECK(px.shape == HilbertShape{n, c});
    CHECK_THAT(px.amplitudes.norm(), WithinAbs(1.0, 1e-12));
    double dot = 0;
    for (int i = 0; i < n; ++i) dot += x[i] * y[i];
    CHECK_THAT(std::real(px.amplitudes.dot(py.amplitudes)), WithinAbs(std::pow(dot / n, c), 1e-12));
    CHECK((px.amplitudes - oracle::witness(x, c)).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(honest_witness({1, -1, 1}, 0), InvalidInstance);
  CHECK_THROWS_AS(honest_witness(std::vector<int>(20, 1), 4, 1000), ResourceLimit);
}

TEST_CASE("the singlet has a negative partial transpose", "[qstate]") {
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(4);
  s(1) = 1 / std::sqrt(2.0);
  s(2) = -1 / std::sqrt(2.0);
  auto rho = pure_density({HilbertShape{2, 2}, s});
  for (int sub : {0, 1}) {
    auto pt = partial_transpose(rho, {sub});
    CHECK_THAT(pt.min_eig(), WithinAbs(-0.5, 1e-12));
    CHECK((pt.entries - oracle::partial_transpose(rho.entries, 2, 2, sub)).norm() == 0.0);
  }
  auto full = partial_transpose(rho, {0, 1});
  CHECK((full.entries - rho.entries.transpose()).norm() == 0.0);
  auto reduced = partial_trace(rho, {0});
  CHECK((reduced.entries - Eigen::MatrixXcd::Identity(2, 2) / 2.0).norm() <= 1e-12);
  CHECK_THROWS_AS(partial_transpose(rho, {2}), InvalidInstance);
}

TEST_CASE("symmetric projectors", "[qstate]") {
  auto p22 = sym_projector(HilbertShape{2, 2});
  CHECK(rank_of(p22) == 3);
  CHECK((p22 * p22 - p22).norm() <= 1e-12);
  CHECK(rank_of(sym_projector(HilbertShape{3, 2})) == 6);
  CHECK(rank_of(sym_projector(HilbertShape{2, 3})) == 4);
  CHECK(rank_of(sym_projector(HilbertShape{3, 3})) == 10);
  CHECK_THROWS_AS(sym_projector(HilbertShape{20, 4}, 1000), ResourceLimit);
}

TEST_CASE("partial trace of products and of moment states", "[qstate][property]") {
  Rng rng(3);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(3, 3), b = Eigen::MatrixXcd::Random(3, 3);
  a = a * a.adjoint();
  b = b * b.adjoint();
  a /= a.trace();
  b /= b.trace();
  DensityMatrix ab{HilbertShape{3, 2}, oracle::kron(oracle::Mat(a), oracle::Mat(b))};
  CHECK((partial_trace(ab, {0}).entries - a).norm() <= 1e-12);
  CHECK((partial_trace(ab, {1}).entries - b).norm() <= 1e-12);
  CHECK(std::abs(partial_trace(ab, {}).entries(0, 0) - 1.0) <= 1e-12);

  auto pe = grigoriev_pe(gen_3xor(5, 3, GenMode::Planted, 4), 4);
  auto rho4 = moment_state(pe, 2);
  CHECK_THAT(rho4.trace(), WithinAbs(1.0, 1e-12));
  auto rho2 = moment_state(pe, 1);
  CHECK((partial_trace(rho4, {0}).entries - rho2.entries).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((partial_trace(rho4, {1}).entries - rho2.entries).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("moment states of point masses are honest witnesses", "[qstate][oracle]") {
  Rng rng(5);
  for (int c : {1, 2}) {
    auto x = random_x(5, rng);
    auto rho = moment_state(point_mass(x), c);
    auto psi = honest_witness(x, c);
    CHECK((rho.entries.cast<cplx>() - pure_density(psi).entries).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(moment_state(grigoriev_pe(gen_3xor(6, 2, GenMode::Planted, 1), 3), 2), DegreeError);
}

TEST_CASE("moment state views: symmetry and the compressed spectrum", "[qstate][property]") {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto pe = grigoriev_pe(gen_3xor(6, 4, GenMode::Planted, s), 6);
    MomentStateView view(pe, 3);
    auto rho = view.materialize();
    CHECK_THAT(view.compressed_min_eig(), WithinAbs(rho.min_eig(), 1e-9));
    for (const auto& perm : all_permutations(3)) CHECK(permutation_deviation(view, perm) == 0.0);
    auto pt = partial_transpose(rho, {1});
    CHECK((pt.entries - oracle::partial_transpose(rho.entries.cast<cplx>(), 6, 3, 1).real()).norm() == 0.0);
    auto [mx, fro] = partial_transpose_deviation(view, {1});
    CHECK_THAT(fro, WithinAbs((pt.entries - rho.entries).norm(), 1e-12));
    CHECK_THAT(mx, WithinAbs((pt.entries - rho.entries).cwiseAbs().maxCoeff(), 1e-15));
    // Real symmetric moment states are invariant under transposing every register.
    CHECK(partial_transpose_deviation(view, {0, 1, 2}).first == 0.0);
  }
}

TEST_CASE("DPS certificate for a planted instance", "[qstate]") {
  auto pe = grigoriev_pe(gen_3xor(8, 6, GenMode::Planted, 1), 8);
  auto rep = dps_certificate(pe, 1, 2);
  CHECK(rep.registers == 4);
  CHECK(rep.dim == 4096);
  CHECK(rep.method == "compressed");
  CHECK(rep.passed());
  CHECK(rep.first_failure().empty());
  CHECK(rep.reduction_residual <= 1e-12);
  CHECK(rep.ppt.size() == 5);

  auto dense = dps_certificate(grigoriev_pe(gen_3xor(5, 3, GenMode::Planted, 2), 5), 1, 2,
                               DpsOptions{kDefaultDimCap, 1500, true});
  CHECK(dense.method == "dense");
  CHECK(dense.ppt.size() == 14);
  CHECK(dense.passed());

  CHECK_THROWS_AS(dps_certificate(pe, 2, 1), ConfigError);
  CHECK_THROWS_AS(dps_certificate(pe, 1, 2, DpsOptions{1000}), ResourceLimit);
}

TEST_CASE("DPS certificate rejects a perturbed pe", "[qstate]") {
  auto pe = grigoriev_pe(gen_3xor(5, 3, GenMode::Planted, 3), 5);
  pe.set(Monomial{0, 1}, pe.at(Monomial{0, 1}) + Rational(3, 2));
  auto rep = dps_certificate(pe, 1, 2);
  CHECK(rep.min_eig < -1e-3);
  CHECK_FALSE(rep.passed());
  CHECK_FALSE(rep.first_failure().empty());
}

TEST_CASE("density matrices round-trip through the binary format", "[qstate]") {
  auto rho = pure_density(honest_witness({1, -1, -1}, 2));
  rho.entries(0, 1) += cplx(0, 0.25);
  std::stringstream ss;
  write_binary(ss, rho);
  auto back = read_binary(ss);
  CHECK(back.shape == rho.shape);
  CHECK((back.entries - rho.entries).norm() == 0.0);

  std::stringstream junk("NOPE0000");
  CHECK_THROWS_AS(read_binary(junk), ConfigError);
  std::string bytes;
  {
    std::stringstream s2;
    write_binary(s2, rho);
    bytes = s2.str();
  }
  std::stringstream cut(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_binary(cut), ConfigError);
  auto j = summary_json(rho);
  CHECK(j.at("dim") == 9);
  CHECK_THAT(j.at("trace").get<double>(), WithinAbs(1.0, 1e-12));
}
