#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "sosgap/boolcore.hpp"
#include "sosgap/errors.hpp"
#include "sosgap/poly.hpp"
#include "sosgap/pseudoexp.hpp"
#include "sosgap/qstate.hpp"
#include "sosgap/random.hpp"
#include "sosgap/reduce.hpp"

namespace sosgap {

// One round of the uniformity test: every edge is measured in {|i>+|j>, |i>-|j>}, every
// unmatched vertex in the computational basis.
struct Matching {
  std::vector<std::pair<int, int>> edges;
  std::vector<int> unmatched;
};

// Round-robin 1-factorization of K_n; odd n gets a dummy vertex whose partner is unmatched.
inline std::vector<Matching> round_robin_matchings(int n) {
  if (n < 2) throw ConfigError("matchings need n >= 2");
  const int np = n + (n % 2);
  std::vector<Matching> out;
  for (int r = 0; r < np - 1; ++r) {
    Matching m;
    auto add = [&](int a, int b) {
      if (a >= n) m.unmatched.push_back(b);
      else if (b >= n) m.unmatched.push_back(a);
      else m.edges.emplace_back(std::min(a, b), std::max(a, b));
    };
    add(np - 1, r);
    for (int k = 1; k < np / 2; ++k) add((r + k) % (np - 1), (r - k + np - 1) % (np - 1));
    std::sort(m.edges.begin(), m.edges.end());
    out.push_back(std::move(m));
  }
  return out;
}

// Variable-disjoint clause blocks, one greedy colouring per clause family.
struct ClauseBlocks {
  std::vector<std::vector<int>> two_out_of_four;
  std::vector<std::vector<int>> eq;
};

inline ClauseBlocks greedy_blocks(const CspInstance& csp) {
  ClauseBlocks b;
  auto colour = [&](ClauseKind kind, std::vector<std::vector<int>>& blocks) {
    std::vector<std::vector<char>> used;
    for (int c = 0; c < csp.m(); ++c) {
      if (csp.clauses[c].kind != kind) continue;
      std::size_t k = 0;
      for (; k < blocks.size(); ++k) {
        bool free = true;
        for (const auto& l : csp.clauses[c].lits) free = free && !used[k][l.var];
        if (free) break;
      }
      if (k == blocks.size()) {
        blocks.emplace_back();
        used.emplace_back(csp.nvars, 0);
      }
      blocks[k].push_back(c);
      for (const auto& l : csp.clauses[c].lits) used[k][l.var] = 1;
    }
  };
  colour(ClauseKind::TwoOutOfFour, b.two_out_of_four);
  colour(ClauseKind::Eq, b.eq);
  return b;
}

enum TestIndex { kProductTest = 0, kSymmetryTest = 1, kUniformityTest = 2, kSatisfiabilityTest = 3 };
inline constexpr std::array<const char*, 4> kTestNames{"product", "symmetry", "uniformity", "satisfiability"};

struct ProtocolParams {
  int copies_per_side = 1;
  std::array<Rational, 4> weights{Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)};
  int repetitions = 1;
  std::vector<Matching> matchings;
  ClauseBlocks blocks;
  std::size_t cap = kDefaultDimCap;
  // Pe states up to this dimension are materialized before the matrix path runs.
  std::size_t dense_cap = 2048;

  int registers() const { return 2 * copies_per_side; }
};

inline void validate_params(const CspInstance& csp, const ProtocolParams& p) {
  if (p.copies_per_side < 1) throw ConfigError("copies per side must be >= 1");
  if (p.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  Rational total(0);
  for (const auto& w : p.weights) {
    if (w < 0) throw ConfigError("test weights must be nonnegative");
    total += w;
  }
  if (total != 1) throw ConfigError("test weights must sum to 1");
  if (p.matchings.empty()) throw ConfigError("matching family is empty");
  for (const auto& m : p.matchings) {
    std::vector<int> seen(csp.nvars, 0);
    for (auto [a, b] : m.edges) {
      if (a < 0 || b >= csp.nvars) throw ConfigError("matching vertex out of range");
      ++seen[a];
      ++seen[b];
    }
    for (int v : m.unmatched) ++seen.at(v);
    for (int s : seen)
      if (s != 1) throw ConfigError("matching is not perfect after padding");
  }
  std::vector<int> covered(csp.m(), 0);
  for (const auto* fam : {&p.blocks.two_out_of_four, &p.blocks.eq})
    for (const auto& block : *fam) {
      std::vector<char> used(csp.nvars, 0);
      for (int c : block) {
        ++covered.at(c);
        for (const auto& l : csp.clauses[c].lits) {
          if (used[l.var]) throw ConfigError("clause block is not variable-disjoint");
          used[l.var] = 1;
        }
      }
    }
  for (int c : covered)
    if (c != 1) throw ConfigError("clause blocks must cover every clause exactly once");
}

inline ProtocolParams make_params(const CspInstance& csp, int copies_per_side = 1,
                                  std::array<Rational, 4> weights = {Rational(1, 4), Rational(1, 4),
                                                                     Rational(1, 4), Rational(1, 4)},
                                  int repetitions = 1) {
  ProtocolParams p;
  p.copies_per_side = copies_per_side;
  p.weights = weights;
  p.repetitions = repetitions;
  p.matchings = round_robin_matchings(csp.nvars);
  p.blocks = greedy_blocks(csp);
  validate_params(csp, p);
  return p;
}

// ---------------------------------------------------------------------------
// Satisfiability operator A = I - sum_C pi_C |C><C|

struct ClauseVector {
  std::vector<std::pair<int, int>> coeffs;  // (variable, +-1), unnormalized
  double norm2 = 0.0;
  Rational prob;  // pi_C
};

// |C> = (sum_t s_t |i_t>)/2 for 2oo4, (s_a |a> - s_b |b>)/sqrt 2 for Eq. A register picks the
// 2oo4 or the Eq family with probability 1/2 (all mass to a family if the other is empty),
// then a uniform block; pi_C is the probability that C's block is chosen.
inline std::vector<ClauseVector> clause_vectors(const CspInstance& csp, const ClauseBlocks& blocks) {
  const bool has4 = !blocks.two_out_of_four.empty(), has2 = !blocks.eq.empty();
  const Rational fam4 = has4 ? (has2 ? Rational(1, 2) : Rational(1)) : Rational(0);
  const Rational fam2 = has2 ? 1 - fam4 : Rational(0);
  std::vector<ClauseVector> out;
  auto emit = [&](const std::vector<std::vector<int>>& fam, Rational famp) {
    for (const auto& block : fam)
      for (int c : block) {
        const auto& cl = csp.clauses[c];
        ClauseVector v;
        v.prob = famp / static_cast<std::int64_t>(fam.size());
        if (cl.kind == ClauseKind::TwoOutOfFour) {
          for (const auto& l : cl.lits) v.coeffs.emplace_back(l.var, l.sign);
          v.norm2 = 4.0;
        } else {
          v.coeffs = {{cl.lits[0].var, cl.lits[0].sign}, {cl.lits[1].var, -cl.lits[1].sign}};
          v.norm2 = 2.0;
        }
        out.push_back(std::move(v));
      }
  };
  emit(blocks.two_out_of_four, fam4);
  emit(blocks.eq, fam2);
  return out;
}

struct SparseEntry {
  int row, col;
  double value;
};

inline std::vector<SparseEntry> satisfiability_operator(int nvars, const std::vector<ClauseVector>& cvs) {
  std::unordered_map<std::int64_t, double> acc;
  for (int i = 0; i < nvars; ++i) acc[static_cast<std::int64_t>(i) * nvars + i] += 1.0;
  for (const auto& v : cvs) {
    const double w = to_double(v.prob) / v.norm2;
    for (auto [a, sa] : v.coeffs)
      for (auto [b, sb] : v.coeffs) acc[static_cast<std::int64_t>(a) * nvars + b] -= w * sa * sb;
  }
  std::vector<SparseEntry> out;
  for (auto [k, val] : acc)
    if (val != 0.0) out.push_back({static_cast<int>(k / nvars), static_cast<int>(k % nvars), val});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  return out;
}

// q_A(x) = <psi_x|A|psi_x> = 1 - sum_C pi_C (v_C . x)^2 / (|v_C|^2 n).
inline MultilinearPoly satisfiability_poly(int nvars, const std::vector<ClauseVector>& cvs) {
  MultilinearPoly q(nvars, Rational(1));
  for (const auto& v : cvs) {
    MultilinearPoly lin(nvars);
    for (auto [a, s] : v.coeffs) lin.add_term(Monomial{a}, s);
    q -= (lin * lin) * (v.prob / Rational(static_cast<std::int64_t>(v.norm2) * nvars));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Reports

enum class EvalPath { Direct, Matrix, Polynomial };

inline std::string to_string(EvalPath p) {
  switch (p) {
    case EvalPath::Direct: return "direct";
    case EvalPath::Matrix: return "matrix";
    case EvalPath::Polynomial: return "polynomial";
  }
  return "?";
}

struct AcceptReport {
  std::array<double, 4> per_test{};
  double single_round = 0.0;
  double total = 0.0;
  EvalPath path = EvalPath::Direct;
};

inline AcceptReport combine(const std::array<double, 4>& p, const ProtocolParams& params, EvalPath path) {
  AcceptReport r;
  r.per_test = p;
  r.path = path;
  for (int t = 0; t < 4; ++t) r.single_round += to_double(params.weights[t]) * p[t];
  r.total = std::pow(r.single_round, params.repetitions);
  return r;
}

inline nlohmann::json to_json(const AcceptReport& r) {
  nlohmann::json per;
  for (int t = 0; t < 4; ++t) per[kTestNames[t]] = r.per_test[t];
  return {{"per_test", per}, {"single_round", r.single_round}, {"total", r.total}, {"path", to_string(r.path)}};
}

// ---------------------------------------------------------------------------
// Matrix path over any state view with entry(i, j) on R = 2c registers of dimension n.
// Registers 0..c-1 are side A, c..2c-1 side B.

namespace detail {

template <class View>
double product_test_matrix(const View& v, int c) {
  double s = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
    std::vector<int> perm(2 * c);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < c; ++i)
      if (mask >> i & 1) std::swap(perm[i], perm[c + i]);
    s += std::real(permutation_expectation(v, perm));
  }
  return s / static_cast<double>(1u << c);
}

template <class View>
double symmetry_test_matrix(const View& v, int c) {
  auto perms = all_permutations(c);
  double s = 0.0;
  for (const auto& pa : perms)
    for (const auto& pb : perms) {
      std::vector<int> perm(2 * c);
      for (int i = 0; i < c; ++i) {
        perm[i] = pa[i];
        perm[c + i] = c + pb[i];
      }
      s += std::real(permutation_expectation(v, perm));
    }
  return s / static_cast<double>(perms.size() * perms.size());
}

// Measurement basis of one matching: outcome o has support {(index, amplitude)}, an edge id
// (or -1) and a sign.
struct Outcome {
  std::array<std::pair<int, double>, 2> support;
  int len;
  int edge;
  int sign;
};

inline std::vector<Outcome> matching_basis(const Matching& m) {
  std::vector<Outcome> out;
  const double h = 1.0 / std::sqrt(2.0);
  for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
    auto [i, j] = m.edges[e];
    out.push_back({{{{i, h}, {j, h}}}, 2, e, +1});
    out.push_back({{{{i, h}, {j, -h}}}, 2, e, -1});
  }
  for (int v : m.unmatched) out.push_back({{{{v, 1.0}, {v, 0.0}}}, 1, -1, 0});
  return out;
}

template <class View>
double uniformity_test_matrix(const View& v, const std::vector<Matching>& ms, int registers) {
  const auto sh = v.shape();
  double total = 0.0;
  for (const auto& m : ms) {
    auto basis = matching_basis(m);
    const std::size_t nb = basis.size();
    std::vector<std::size_t> o(registers, 0);
    double accept = 0.0;
    for (std::size_t t = 0;; ++t) {
      bool conflict = false;
      for (int a = 0; a < registers && !conflict; ++a)
        for (int b = a + 1; b < registers && !conflict; ++b)
          conflict = basis[o[a]].edge >= 0 && basis[o[a]].edge == basis[o[b]].edge &&
                     basis[o[a]].sign != basis[o[b]].sign;
      if (!conflict) {
        // <o|rho|o> over the product support.
        double p = 0.0;
        const int terms = 1 << (2 * registers);
        for (int code = 0; code < terms; ++code) {
          std::size_t row = 0, col = 0;
          double amp = 1.0;
          bool ok = true;
          for (int r = 0; r < registers && ok; ++r) {
            const auto& out = basis[o[r]];
            int ri = (code >> (2 * r)) & 1, ci = (code >> (2 * r + 1)) & 1;
            if (ri >= out.len || ci >= out.len) ok = false;
            else {
              row = row * sh.local_dim + out.support[ri].first;
              col = col * sh.local_dim + out.support[ci].first;
              amp *= out.support[ri].second * out.support[ci].second;
            }
          }
          if (ok) p += amp * std::real(v.entry(row, col));
        }
        accept += p;
      }
      int r = registers - 1;
      while (r >= 0 && ++o[r] == nb) o[r--] = 0;
      if (r < 0) break;
    }
    total += accept;
  }
  return total / static_cast<double>(ms.size());
}

template <class View>
double satisfiability_test_matrix(const View& v, const std::vector<SparseEntry>& a, int registers) {
  const auto sh = v.shape();
  std::vector<std::size_t> k(registers, 0);
  double s = 0.0;
  while (true) {
    // tr(A^{(x)R} rho) = sum A[r_1,c_1]...A[r_R,c_R] rho[(c_1..c_R), (r_1..r_R)].
    std::size_t row = 0, col = 0;
    double w = 1.0;
    for (int r = 0; r < registers; ++r) {
      row = row * sh.local_dim + a[k[r]].row;
      col = col * sh.local_dim + a[k[r]].col;
      w *= a[k[r]].value;
    }
    s += w * std::real(v.entry(col, row));
    int r = registers - 1;
    while (r >= 0 && ++k[r] == a.size()) k[r--] = 0;
    if (r < 0) break;
  }
  return s;
}

template <class View>
std::array<double, 4> matrix_tests(const CspInstance& csp, const View& v, const ProtocolParams& params) {
  const int c = params.copies_per_side;
  auto cvs = clause_vectors(csp, params.blocks);
  return {product_test_matrix(v, c), symmetry_test_matrix(v, c),
          uniformity_test_matrix(v, params.matchings, params.registers()),
          satisfiability_test_matrix(v, satisfiability_operator(csp.nvars, cvs), params.registers())};
}

inline MultilinearPoly power(const MultilinearPoly& p, int e) {
  MultilinearPoly out(p.nvars(), Rational(1));
  for (int i = 0; i < e; ++i) out = out * p;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Polynomial path: tr(T rho~) = psi[<psi_x|^{(x)R} T |psi_x>^{(x)R}] for each test operator T.

inline std::array<double, 4> polynomial_tests(const CspInstance& csp, const PseudoExpectation& pe,
                                              const ProtocolParams& params) {
  const int n = csp.nvars, R = params.registers();
  if (pe.nvars() != n) throw ConfigError("pe and CSP variable counts differ");
  if (2 * R > pe.degree() && !pe.complete())
    throw DegreeError("protocol on " + std::to_string(R) + " registers needs pe degree " + std::to_string(2 * R));
  std::array<double, 4> p{};
  // Permutations of identical factors leave <psi_x|psi_x>^R = (sum_i x_i^2 / n)^R.
  MultilinearPoly norm(n);
  for (int i = 0; i < n; ++i) norm += MultilinearPoly::monomial(n, Monomial({i, i}), Rational(1, n));
  const double one = to_double(pe_eval(pe, detail::power(norm, R)));
  p[kProductTest] = one;
  p[kSymmetryTest] = one;

  // Outcome probabilities f_o(x) = |<o|psi_x>|^2. A conflicting tuple contains f_{e+} f_{e-},
  // which reduces to 0 on the cube, so every conflict term vanishes and the accept
  // polynomial is (sum_o f_o)^R.
  double unif = 0.0;
  for (const auto& m : params.matchings) {
    MultilinearPoly sum(n);
    for (auto [i, j] : m.edges) {
      MultilinearPoly plus(n), minus(n);
      plus.add_term(Monomial{i}, 1);
      plus.add_term(Monomial{j}, 1);
      minus.add_term(Monomial{i}, 1);
      minus.add_term(Monomial{j}, -1);
      auto fp = plus * plus * Rational(1, 2 * n), fm = minus * minus * Rational(1, 2 * n);
      if (!(fp * fm).is_zero()) throw Error("uniformity conflict polynomial does not vanish");
      sum += fp + fm;
    }
    for (int v : m.unmatched) sum += MultilinearPoly(n, Rational(1, n));
    unif += to_double(pe_eval(pe, detail::power(sum, R)));
  }
  p[kUniformityTest] = unif / static_cast<double>(params.matchings.size());

  auto q = satisfiability_poly(n, clause_vectors(csp, params.blocks));
  p[kSatisfiabilityTest] = to_double(pe_eval(pe, detail::power(q, R)));
  return p;
}

// ---------------------------------------------------------------------------
// Direct evaluation on an honest witness |psi_y>^{(x)2c}: each register is an independent
// copy of |psi_y>, so every test reduces to single-register numbers.

inline std::array<double, 4> direct_tests(const CspInstance& csp, const std::vector<int>& y,
                                          const ProtocolParams& params,
                                          const std::vector<SparseEntry>* a_op = nullptr) {
  validate_assignment(y, csp.nvars);
  const int n = csp.nvars, R = params.registers();
  std::vector<double> phi(n);
  double nrm = 0.0;
  for (int i = 0; i < n; ++i) {
    phi[i] = y[i] / std::sqrt(static_cast<double>(n));
    nrm += phi[i] * phi[i];
  }
  std::array<double, 4> p{};
  p[kProductTest] = std::pow(nrm, R);
  p[kSymmetryTest] = std::pow(nrm, R);

  // Slots are edges (two signed outcomes) or unmatched vertices. With iid registers,
  // Pr[no conflict] = sum over slot occupation counts of R!/prod k_s! prod g_s(k_s), where
  // g_s(k) = d_+^k + d_-^k on an edge and d^k on a vertex.
  std::vector<double> fact(R + 1, 1.0);
  for (int k = 1; k <= R; ++k) fact[k] = fact[k - 1] * k;
  double unif = 0.0;
  for (const auto& m : params.matchings) {
    std::vector<double> dp(R + 1, 0.0);
    dp[0] = 1.0;
    auto absorb = [&](double dplus, double dminus, bool edge) {
      std::vector<double> next(R + 1, 0.0);
      for (int used = 0; used <= R; ++used) {
        if (dp[used] == 0.0) continue;
        for (int k = 0; used + k <= R; ++k) {
          double g = k == 0 ? 1.0 : (edge ? std::pow(dplus, k) + std::pow(dminus, k) : std::pow(dplus, k));
          next[used + k] += dp[used] * g / fact[k];
        }
      }
      dp = std::move(next);
    };
    for (auto [i, j] : m.edges) {
      double ap = (phi[i] + phi[j]) / std::sqrt(2.0), am = (phi[i] - phi[j]) / std::sqrt(2.0);
      absorb(ap * ap, am * am, true);
    }
    for (int v : m.unmatched) absorb(phi[v] * phi[v], 0.0, false);
    unif += dp[R] * fact[R];
  }
  p[kUniformityTest] = unif / static_cast<double>(params.matchings.size());

  std::vector<SparseEntry> local;
  if (!a_op) {
    local = satisfiability_operator(n, clause_vectors(csp, params.blocks));
    a_op = &local;
  }
  double qa = 0.0;
  for (const auto& e : *a_op) qa += phi[e.row] * e.value * phi[e.col];
  p[kSatisfiabilityTest] = std::pow(qa, R);
  return p;
}

// ---------------------------------------------------------------------------
// accept_probability

using Witness = std::variant<std::vector<int>, const PseudoExpectation*>;

inline AcceptReport accept_probability(const CspInstance& csp, const Witness& w, const ProtocolParams& params,
                                       std::optional<EvalPath> path = std::nullopt) {
  validate_params(csp, params);
  if (std::holds_alternative<std::vector<int>>(w)) {
    const auto& y = std::get<std::vector<int>>(w);
    EvalPath p = path.value_or(EvalPath::Direct);
    if (p == EvalPath::Polynomial) {
      auto pe = point_mass(y, 2 * params.registers());
      return combine(polynomial_tests(csp, pe, params), params, p);
    }
    if (p == EvalPath::Matrix) {
      auto psi = honest_witness(y, params.registers(), params.cap);
      return combine(detail::matrix_tests(csp, PureStateView{&psi}, params), params, p);
    }
    return combine(direct_tests(csp, y, params), params, p);
  }
  const auto& pe = *std::get<const PseudoExpectation*>(w);
  EvalPath p = path.value_or(EvalPath::Polynomial);
  if (p == EvalPath::Direct) throw ConfigError("direct evaluation needs an assignment witness");
  if (p == EvalPath::Polynomial) return combine(polynomial_tests(csp, pe, params), params, p);
  MomentStateView view(pe, params.registers(), params.cap);
  if (view.dim() <= params.dense_cap) {
    auto rho = view.materialize();
    return combine(detail::matrix_tests(csp, DenseView<double>{&rho}, params), params, p);
  }
  return combine(detail::matrix_tests(csp, view, params), params, p);
}

// Per-test accessors: (product test, symmetry test), uniformity, satisfiability.
inline std::pair<double, double> product_sym_accept(const CspInstance& csp, const Witness& w,
                                                    const ProtocolParams& params,
                                                    std::optional<EvalPath> path = std::nullopt) {
  auto r = accept_probability(csp, w, params, path);
  return {r.per_test[kProductTest], r.per_test[kSymmetryTest]};
}
inline double uniformity_accept(const CspInstance& csp, const Witness& w, const ProtocolParams& params,
                                std::optional<EvalPath> path = std::nullopt) {
  return accept_probability(csp, w, params, path).per_test[kUniformityTest];
}
inline double satisfiability_accept(const CspInstance& csp, const Witness& w, const ProtocolParams& params,
                                    std::optional<EvalPath> path = std::nullopt) {
  return accept_probability(csp, w, params, path).per_test[kSatisfiabilityTest];
}

// ---------------------------------------------------------------------------
// Honest sweep over embedded source assignments

struct SweepResult {
  double max_accept = 0.0;
  std::vector<int> argmax;  // source assignment
  AcceptReport best;
  std::size_t evaluated = 0;
};

// Maximum of the honest accept probability over |psi_{E(x)}>, x in {+-1}^n. E embeds x into
// the gadget instance and copies values into the expanded instance. Ties keep the first x
// in lexicographic order (-1 < +1).
inline SweepResult honest_sweep(const XorInstance& inst, const CspInstance& expanded,
                                const ProtocolParams& params, int cap_n = 20) {
  validate_params(expanded, params);
  if (inst.n > cap_n) throw ResourceLimit("honest_sweep: n=" + std::to_string(inst.n) + " exceeds cap");
  auto a_op = satisfiability_operator(expanded.nvars, clause_vectors(expanded, params.blocks));
  SweepResult res;
  res.max_accept = -1.0;
  std::vector<int> x(inst.n);
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << inst.n); ++code) {
    for (int i = 0; i < inst.n; ++i) x[i] = (code >> (inst.n - 1 - i) & 1) ? 1 : -1;
    auto y = lift_to_expanded(expanded, embed_assignment(inst, x));
    auto rep = combine(direct_tests(expanded, y, params, &a_op), params, EvalPath::Direct);
    ++res.evaluated;
    if (rep.total > res.max_accept) {
      res.max_accept = rep.total;
      res.argmax = x;
      res.best = rep;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// h_Sep lower bound by seesaw

struct SeesawResult {
  double value = 0.0;
  Eigen::VectorXcd x, y;
  // Objective after each half-step of the best restart.
  std::vector<double> history;
  bool monotone = true;
};

inline void check_measurement(const Eigen::MatrixXcd& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) throw InvalidMeasurement("measurement must be square");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) throw InvalidMeasurement("measurement is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -tol || es.eigenvalues()(m.rows() - 1) > 1 + tol)
    throw InvalidMeasurement("measurement is not between 0 and I");
}

// Alternating maximization of <x (x) y|M|x (x) y> over unit x in C^da, y in C^db.
inline SeesawResult hsep_seesaw(const Eigen::MatrixXcd& m, int da, int db, int restarts = 20, int iters = 500,
                                std::uint64_t seed = 1) {
  if (da < 1 || db < 1 || m.rows() != static_cast<Eigen::Index>(da) * db)
    throw InvalidMeasurement("measurement dimension does not match da * db");
  if (static_cast<std::size_t>(m.rows()) > kDefaultDimCap) throw ResourceLimit("seesaw dimension exceeds cap");
  check_measurement(m);
  Rng rng(seed);
  auto top = [](const Eigen::MatrixXcd& h, Eigen::VectorXcd& v) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    v = es.eigenvectors().col(h.rows() - 1);
    return es.eigenvalues()(h.rows() - 1);
  };
  SeesawResult best;
  best.value = -1.0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXcd y(db), x(da);
    for (int b = 0; b < db; ++b) y(b) = cplx(standard_normal(rng), standard_normal(rng));
    y.normalize();
    std::vector<double> hist;
    bool mono = true;
    double val = -1.0;
    for (int it = 0; it < iters; ++it) {
      Eigen::MatrixXcd mx = Eigen::MatrixXcd::Zero(da, da);
      for (int a = 0; a < da; ++a)
        for (int a2 = 0; a2 < da; ++a2)
          for (int b = 0; b < db; ++b)
            for (int b2 = 0; b2 < db; ++b2)
              mx(a, a2) += std::conj(y(b)) * m(a * db + b, a2 * db + b2) * y(b2);
      double v1 = top(mx, x);
      Eigen::MatrixXcd my = Eigen::MatrixXcd::Zero(db, db);
      for (int b = 0; b < db; ++b)
        for (int b2 = 0; b2 < db; ++b2)
          for (int a = 0; a < da; ++a)
            for (int a2 = 0; a2 < da; ++a2)
              my(b, b2) += std::conj(x(a)) * m(a * db + b, a2 * db + b2) * x(a2);
      double v2 = top(my, y);
      if (!hist.empty() && v1 < hist.back() - 1e-12) mono = false;
      if (v2 < v1 - 1e-12) mono = false;
      hist.push_back(v1);
      hist.push_back(v2);
      bool done = v2 - val < 1e-15;
      val = v2;
      if (done) break;
    }
    if (val > best.value) {
      best.value = val;
      best.x = x;
      best.y = y;
      best.history = std::move(hist);
      best.monotone = mono;
    } else {
      best.monotone = best.monotone && mono;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// 2 -> 4 norm bridge

// M_{ij,kl} = sum_a A_{ai} A_{aj} A_{ak} A_{al} on C^n (x) C^n, n = columns of A, so that
// <x (x) x|M|x (x) x> = ||Ax||_4^4.
inline Eigen::MatrixXd two_to_four_bridge(const Eigen::MatrixXd& a, int cap_cols = 64) {
  const auto n = a.cols();
  if (n < 1 || n > cap_cols) throw ResourceLimit("two_to_four_bridge: column count outside [1, cap]");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::VectorXd v(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = a(r, i) * a(r, j);
    m += v * v.transpose();
  }
  return m;
}

inline double norm4_power4(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  return (a * x).array().pow(4).sum();
}

// ||A||_{2->4} by a hyperspherical grid over the half sphere followed by the ascent
// x <- normalize(A^T (Ax)^3) from the best grid points.
inline double norm24_grid(const Eigen::MatrixXd& a, int steps = 48, int polish_from = 12, int polish_iters = 2000) {
  const int n = static_cast<int>(a.cols());
  if (n < 1) throw InvalidMeasurement("empty matrix");
  if (n == 1) return std::pow(norm4_power4(a, Eigen::VectorXd::Ones(1)), 0.25);
  const int angles = n - 1;
  if (std::pow(static_cast<double>(steps), angles) > 2e7) throw ResourceLimit("norm24_grid: grid exceeds 2e7 points");
  std::vector<std::pair<double, Eigen::VectorXd>> pts;
  std::vector<int> k(angles, 0);
  const double pi = 3.141592653589793;
  while (true) {
    Eigen::VectorXd x(n);
    double sprod = 1.0;
    for (int t = 0; t < angles; ++t) {
      // Last angle covers [0, pi) since x and -x agree; the others cover [0, pi].
      double th = t + 1 < angles ? pi * k[t] / (steps - 1) : pi * k[t] / steps;
      x(t) = sprod * std::cos(th);
      sprod *= std::sin(th);
    }
    x(n - 1) = sprod;
    pts.emplace_back(norm4_power4(a, x), x);
    int t = angles - 1;
    while (t >= 0 && ++k[t] == steps) k[t--] = 0;
    if (t < 0) break;
  }
  std::partial_sort(pts.begin(), pts.begin() + std::min<std::size_t>(polish_from, pts.size()), pts.end(),
                    [](const auto& p, const auto& q) { return p.first > q.first; });
  double best = pts.front().first;
  for (std::size_t s = 0; s < std::min<std::size_t>(polish_from, pts.size()); ++s) {
    Eigen::VectorXd x = pts[s].second;
    double val = pts[s].first;
    for (int it = 0; it < polish_iters; ++it) {
      Eigen::VectorXd g = a.transpose() * (a * x).array().pow(3).matrix();
      if (g.norm() == 0.0) break;
      Eigen::VectorXd nx = g.normalized();
      double nv = norm4_power4(a, nx);
      x = nx;
      if (nv - val < 1e-16) {
        val = std::max(val, nv);
        break;
      }
      val = nv;
    }
    best = std::max(best, val);
  }
  return std::pow(best, 0.25);
}

// Random A with entries N(0,1), rescaled so that the bridge matrix has norm 1.
inline Eigen::MatrixXd random_bridge_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd a(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a(r, c) = standard_normal(rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(two_to_four_bridge(a), Eigen::EigenvaluesOnly);
  return a / std::pow(es.eigenvalues()(es.eigenvalues().size() - 1), 0.25);
}

}  // namespace sosgap
