#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sosgap/boolcore.hpp"
#include "sosgap/errors.hpp"
#include "sosgap/monomial.hpp"
#include "sosgap/poly.hpp"
#include "sosgap/rational.hpp"

namespace sosgap {

// Degree-d linear functional on multilinear monomials; entries not stored are 0.
class PseudoExpectation {
 public:
  using Table = std::unordered_map<Monomial, Rational, MonomialHash>;

  PseudoExpectation() = default;
  PseudoExpectation(int nvars, int degree) : nvars_(nvars), degree_(degree) {
    if (nvars < 0 || degree < 0) throw DegreeError("negative nvars or degree");
  }

  int nvars() const { return nvars_; }
  int degree() const { return degree_; }
  // Defined on every multilinear polynomial.
  bool complete() const { return degree_ >= nvars_; }
  const Table& table() const { return table_; }

  Rational at(const Monomial& s) const {
    if (static_cast<int>(s.size()) > degree_)
      throw DegreeError("monomial " + s.str() + " above pe degree " + std::to_string(degree_));
    auto it = table_.find(s);
    return it == table_.end() ? Rational(0) : it->second;
  }

  void set(const Monomial& s, const Rational& v) {
    if (static_cast<int>(s.size()) > degree_ || s.max_index() >= nvars_)
      throw DegreeError("monomial " + s.str() + " outside the pe domain");
    if (v == 0) table_.erase(s);
    else table_[s] = v;
  }

 private:
  int nvars_ = 0;
  int degree_ = 0;
  Table table_;
};

inline Rational pe_eval(const PseudoExpectation& pe, const MultilinearPoly& f) {
  if (f.degree() > pe.degree())
    throw DegreeError("polynomial degree " + std::to_string(f.degree()) + " exceeds pe degree " +
                      std::to_string(pe.degree()));
  Rational s(0);
  for (const auto& [m, c] : f.terms()) s += c * pe.at(m);
  return s;
}

// ---------------------------------------------------------------------------
// 3XOR objective and constraints

inline MultilinearPoly xor_objective(const XorInstance& inst) {
  MultilinearPoly f(inst.n, Rational(1, 2));
  for (const auto& c : inst.clauses)
    f.add_term(Monomial({c.vars[0], c.vars[1], c.vars[2]}), Rational(c.rhs, 2 * inst.m()));
  return f;
}

// Clause indicator minus one, (a x_i x_j x_k - 1)/2.
inline std::vector<MultilinearPoly> xor_constraints(const XorInstance& inst) {
  std::vector<MultilinearPoly> out;
  for (const auto& c : inst.clauses) {
    MultilinearPoly g(inst.n, Rational(-1, 2));
    g.add_term(Monomial({c.vars[0], c.vars[1], c.vars[2]}), Rational(c.rhs, 2));
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constructions

// Largest width in [3, cap] whose closure is contradiction-free; nullopt if width 3 already
// refutes. Closure is monotone in width, so bisection is exact.
inline std::optional<int> max_grigoriev_degree(const XorInstance& inst, int cap,
                                               std::size_t budget = 1'000'000) {
  auto ok = [&](int w) {
    auto cl = gf2_closure(inst, w, budget);
    if (cl.truncated) throw ResourceLimit("closure budget exhausted at width " + std::to_string(w));
    return !cl.contradiction;
  };
  if (cap < 3 || !ok(3)) return std::nullopt;
  int lo = 3, hi = cap;
  if (ok(hi)) return hi;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

// psi[x_S] = (-1)^rhs on closure equations of width <= d, 0 elsewhere.
inline PseudoExpectation grigoriev_pe(const XorInstance& inst, int degree,
                                      std::size_t budget = 1'000'000) {
  auto cl = gf2_closure(inst, degree, budget);
  if (cl.truncated) throw ResourceLimit("closure budget exhausted at width " + std::to_string(degree));
  if (cl.contradiction) {
    auto best = max_grigoriev_degree(inst, degree - 1, budget);
    throw DegreeTooHigh("closure at width " + std::to_string(degree) + " derives 0 = 1", best);
  }
  PseudoExpectation pe(inst.n, degree);
  pe.set(Monomial{}, 1);
  for (const auto& eq : cl.equations) pe.set(Monomial(eq.indices()), eq.rhs ? -1 : 1);
  return pe;
}

// Expectation under a finite distribution on {+-1}^n, truncated to the given degree
// (negative means complete).
inline PseudoExpectation distribution_pe(const std::vector<std::vector<int>>& points,
                                         const std::vector<Rational>& weights, int degree = -1) {
  if (points.empty() || points.size() != weights.size())
    throw InvalidAssignment("distribution needs matching non-empty points and weights");
  const int n = static_cast<int>(points[0].size());
  if (degree < 0) degree = n;
  Rational total(0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    validate_assignment(points[p], n);
    if (weights[p] < 0) throw InvalidAssignment("negative probability");
    total += weights[p];
  }
  if (total != 1) throw InvalidAssignment("weights must sum to 1");
  auto monos = monomials_up_to(n, degree);
  if (monos.size() > (std::size_t{1} << 22)) throw ResourceLimit("distribution pe table too large");
  PseudoExpectation pe(n, degree);
  for (const auto& s : monos) {
    Rational v(0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      int sign = 1;
      for (int i : s) sign *= points[p][i];
      v += sign > 0 ? weights[p] : -weights[p];
    }
    pe.set(s, v);
  }
  return pe;
}

inline PseudoExpectation point_mass(const std::vector<int>& x, int degree = -1) {
  return distribution_pe({x}, {Rational(1)}, degree);
}

// For a complete pe on n <= 20 variables: p(x) = 2^-n sum_S psi[x_S] chi_S(x), indexed
// by pattern with bit i set meaning x_i = -1.
inline std::vector<Rational> reconstruct_distribution(const PseudoExpectation& pe) {
  if (!pe.complete()) throw DegreeError("reconstruct_distribution needs a complete pe");
  const int n = pe.nvars();
  if (n > 20) throw ResourceLimit("reconstruct_distribution: n > 20");
  std::vector<Rational> f(std::size_t{1} << n, Rational(0));
  for (const auto& [s, v] : pe.table()) {
    std::uint32_t mask = 0;
    for (int i : s) mask |= 1u << i;
    f[mask] = v;
  }
  // Walsh-Hadamard transform in place.
  for (int b = 0; b < n; ++b)
    for (std::size_t i = 0; i < f.size(); ++i)
      if (!(i >> b & 1)) {
        Rational u = f[i], w = f[i | (std::size_t{1} << b)];
        f[i] = u + w;
        f[i | (std::size_t{1} << b)] = u - w;
      }
  for (auto& v : f) v /= Rational(std::int64_t{1} << n);
  return f;
}

// ---------------------------------------------------------------------------
// Moment matrices and validity

struct MomentMatrix {
  std::vector<Monomial> index;
  Eigen::MatrixXd entries;
};

inline MomentMatrix moment_matrix(const PseudoExpectation& pe, int degree) {
  if (degree > pe.degree())
    throw DegreeError("moment degree " + std::to_string(degree) + " exceeds pe degree " +
                      std::to_string(pe.degree()));
  MomentMatrix mm;
  mm.index = monomials_up_to(pe.nvars(), degree / 2);
  const auto dim = static_cast<Eigen::Index>(mm.index.size());
  mm.entries.resize(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = a; b < dim; ++b)
      mm.entries(a, b) = mm.entries(b, a) = to_double(pe.at(sym_diff(mm.index[a], mm.index[b])));
  return mm;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Tolerance scales with the dimension of the matrix being certified.
inline double psd_tolerance(Eigen::Index dim) { return 1e-9 * static_cast<double>(std::max<Eigen::Index>(dim, 1)); }

struct ValidityReport {
  Rational normalization_residual;
  struct Block {
    int degree;
    Eigen::Index dim;
    double min_eig;
    double tolerance;
  };
  std::vector<Block> blocks;
  Rational max_constraint_residual;
  std::size_t constraints_checked = 0;
  std::size_t multipliers_checked = 0;
  std::string first_violation;

  bool psd_ok() const {
    for (const auto& b : blocks)
      if (b.min_eig < -b.tolerance) return false;
    return true;
  }
  double min_eig() const {
    double m = 1e300;
    for (const auto& b : blocks) m = std::min(m, b.min_eig);
    return blocks.empty() ? 0.0 : m;
  }
  bool valid() const {
    return normalization_residual == 0 && psd_ok() && max_constraint_residual == 0;
  }
};

struct CheckOptions {
  // Blocks above this dimension are skipped; the skip is visible in the report.
  Eigen::Index max_block_dim = 6000;
  bool check_psd = true;
};

// Constraint residuals range over every monomial multiplier of degree <= d - deg g.
inline ValidityReport check_pe(const PseudoExpectation& pe,
                               const std::vector<MultilinearPoly>& constraints,
                               const CheckOptions& opt = {}) {
  ValidityReport rep;
  rep.normalization_residual = abs(pe.at(Monomial{}) - 1);
  if (rep.normalization_residual != 0) rep.first_violation = "normalization";

  if (opt.check_psd) {
    for (int d = 2; d <= std::min(pe.degree(), 2 * pe.nvars()); d += 2) {
      auto dim = static_cast<Eigen::Index>(monomials_up_to(pe.nvars(), d / 2).size());
      if (dim > opt.max_block_dim) break;
      auto mm = moment_matrix(pe, d);
      double ev = min_eigenvalue(mm.entries);
      rep.blocks.push_back({d, dim, ev, psd_tolerance(dim)});
      if (ev < -psd_tolerance(dim) && rep.first_violation.empty())
        rep.first_violation = "moment block degree " + std::to_string(d) + " min eig " + std::to_string(ev);
    }
  }

  rep.max_constraint_residual = 0;
  std::unordered_map<int, std::vector<Monomial>> multipliers;
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const auto& g = constraints[ci];
    const int dg = g.degree();
    if (dg > pe.degree())
      throw DegreeError("constraint " + std::to_string(ci) + " has degree above the pe degree");
    const int budget = std::min(pe.degree() - dg, pe.nvars());
    auto it = multipliers.find(budget);
    if (it == multipliers.end()) it = multipliers.emplace(budget, monomials_up_to(pe.nvars(), budget)).first;
    for (const auto& q : it->second) {
      Rational r(0);
      for (const auto& [m, c] : g.terms()) {
        Monomial prod = sym_diff(m, q);
        if (static_cast<int>(prod.size()) > pe.degree()) continue;
        r += c * pe.at(prod);
      }
      r = abs(r);
      if (r > rep.max_constraint_residual) {
        rep.max_constraint_residual = r;
        if (rep.first_violation.empty())
          rep.first_violation = "constraint " + std::to_string(ci) + " times x" + q.str() +
                                " residual " + to_string(r);
      }
      ++rep.multipliers_checked;
    }
    ++rep.constraints_checked;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pushforward under a polynomial map y_t = p_t(x)

namespace detail {

// Polynomial over <= 64 variables with integer coefficients over a common denominator.
struct MaskPoly {
  std::vector<std::pair<std::uint64_t, std::int64_t>> terms;
  std::int64_t den = 1;
};

inline MaskPoly to_mask_poly(const MultilinearPoly& p) {
  MaskPoly out;
  for (const auto& [m, c] : p.terms()) out.den = std::lcm(out.den, c.denominator());
  for (const auto& [m, c] : p.terms()) {
    std::uint64_t mask = 0;
    for (int i : m) mask |= std::uint64_t{1} << i;
    out.terms.emplace_back(mask, c.numerator() * (out.den / c.denominator()));
  }
  return out;
}

inline MaskPoly mask_mul(const MaskPoly& a, const MaskPoly& b) {
  std::vector<std::pair<std::uint64_t, std::int64_t>> raw;
  raw.reserve(a.terms.size() * b.terms.size());
  for (const auto& [ma, ca] : a.terms)
    for (const auto& [mb, cb] : b.terms) raw.emplace_back(ma ^ mb, ca * cb);
  std::sort(raw.begin(), raw.end());
  MaskPoly out;
  out.den = a.den * b.den;
  for (const auto& t : raw) {
    if (!out.terms.empty() && out.terms.back().first == t.first) out.terms.back().second += t.second;
    else out.terms.push_back(t);
  }
  std::erase_if(out.terms, [](const auto& t) { return t.second == 0; });
  return out;
}

// Source pe values as integers over a common denominator, looked up by bit mask.
class MaskTable {
 public:
  explicit MaskTable(const PseudoExpectation& pe) : degree_(pe.degree()) {
    for (const auto& [s, v] : pe.table()) den_ = std::lcm(den_, v.denominator());
    if (pe.nvars() <= 22) flat_.assign(std::size_t{1} << pe.nvars(), 0);
    for (const auto& [s, v] : pe.table()) {
      std::uint64_t mask = 0;
      for (int i : s) mask |= std::uint64_t{1} << i;
      std::int64_t num = v.numerator() * (den_ / v.denominator());
      if (!flat_.empty()) flat_[mask] = num;
      else hashed_.emplace(mask, num);
    }
  }
  std::int64_t den() const { return den_; }
  std::int64_t operator()(std::uint64_t mask) const {
    if (std::popcount(mask) > degree_) throw DegreeError("pushforward reaches past the source degree");
    if (!flat_.empty()) return flat_[mask];
    auto it = hashed_.find(mask);
    return it == hashed_.end() ? 0 : it->second;
  }

 private:
  int degree_;
  std::int64_t den_ = 1;
  std::vector<std::int64_t> flat_;
  std::unordered_map<std::uint64_t, std::int64_t> hashed_;
};

}  // namespace detail

// pe_B[y_T] = pe[prod_{t in T} p_t(x)] after reduction, for |T| <= target degree. Without an
// explicit target the degree is floor(pe.degree / kappa). A complete source pe accepts any target.
inline PseudoExpectation pushforward(const PseudoExpectation& pe, const std::vector<MultilinearPoly>& map,
                                     std::optional<int> target_degree = std::nullopt) {
  int kappa = 1;
  for (const auto& p : map) {
    if (p.nvars() > pe.nvars()) throw DegreeError("map component uses variables outside the pe");
    kappa = std::max(kappa, p.degree());
  }
  const int tn = static_cast<int>(map.size());
  int td = target_degree.value_or(pe.degree() / kappa);
  if (!pe.complete() && kappa * td > pe.degree())
    throw DegreeError("pushforward: kappa * target degree = " + std::to_string(kappa * td) +
                      " exceeds source degree " + std::to_string(pe.degree()));
  td = std::min(td, tn);
  PseudoExpectation out(tn, td);

  if (pe.nvars() <= 64) {
    detail::MaskTable table(pe);
    std::vector<detail::MaskPoly> comps;
    for (const auto& p : map) comps.push_back(detail::to_mask_poly(p));
    std::vector<int> chosen;
    auto value = [&](const detail::MaskPoly& p) {
      std::int64_t s = 0;
      for (const auto& [m, c] : p.terms) s += c * table(m);
      return Rational(s, p.den * table.den());
    };
    // Depth-first over increasing index sets; the last factor is folded into the lookup.
    auto rec = [&](auto&& self, int start, const detail::MaskPoly& prefix) -> void {
      for (int t = start; t < tn; ++t) {
        chosen.push_back(t);
        const int depth = static_cast<int>(chosen.size());
        if (depth < td) {
          auto next = detail::mask_mul(prefix, comps[t]);
          out.set(Monomial::from_sorted({chosen.begin(), chosen.end()}), value(next));
          self(self, t + 1, next);
        } else {
          std::int64_t s = 0;
          for (const auto& [ma, ca] : prefix.terms)
            for (const auto& [mb, cb] : comps[t].terms) s += ca * cb * table(ma ^ mb);
          out.set(Monomial::from_sorted({chosen.begin(), chosen.end()}),
                  Rational(s, prefix.den * comps[t].den * table.den()));
        }
        chosen.pop_back();
      }
    };
    detail::MaskPoly one;
    one.terms.emplace_back(0, 1);
    out.set(Monomial{}, value(one));
    if (td > 0) rec(rec, 0, one);
    return out;
  }

  for (const auto& t : monomials_up_to(tn, td)) {
    MultilinearPoly prod(pe.nvars(), Rational(1));
    for (int i : t) prod = prod * map[i];
    out.set(t, pe_eval(pe, prod));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {"nvars": int, "degree": int, "table": [[sorted index list, value], ...]}
// Integer values are numbers; others are "p/q" strings so the dump stays exact.

inline nlohmann::json to_json(const ValidityReport& r) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : r.blocks)
    blocks.push_back({{"degree", b.degree}, {"dim", b.dim}, {"min_eig", b.min_eig}, {"tolerance", b.tolerance}});
  return {{"normalization_residual", to_string(r.normalization_residual)},
          {"psd_blocks", blocks},
          {"max_constraint_residual", to_string(r.max_constraint_residual)},
          {"constraints_checked", r.constraints_checked},
          {"multipliers_checked", r.multipliers_checked},
          {"first_violation", r.first_violation},
          {"valid", r.valid()}};
}

inline nlohmann::json to_json(const PseudoExpectation& pe) {
  std::vector<std::pair<Monomial, Rational>> rows(pe.table().begin(), pe.table().end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  nlohmann::json j;
  j["nvars"] = pe.nvars();
  j["degree"] = pe.degree();
  j["table"] = nlohmann::json::array();
  for (const auto& [s, v] : rows) {
    nlohmann::json val = v.denominator() == 1 ? nlohmann::json(v.numerator()) : nlohmann::json(to_string(v));
    j["table"].push_back({s.indices(), val});
  }
  return j;
}

inline PseudoExpectation pe_from_json(const nlohmann::json& j) {
  try {
    PseudoExpectation pe(j.at("nvars").get<int>(), j.at("degree").get<int>());
    for (const auto& row : j.at("table")) {
      auto idx = row.at(0).get<std::vector<int>>();
      if (!std::is_sorted(idx.begin(), idx.end()) ||
          std::adjacent_find(idx.begin(), idx.end()) != idx.end())
        throw DegreeError("table index list must be strictly increasing");
      const auto& v = row.at(1);
      Rational r = v.is_string()            ? parse_rational(v.get<std::string>())
                   : v.is_number_integer() ? Rational(v.get<std::int64_t>())
                                            : rational_from_double(v.get<double>());
      pe.set(Monomial(idx), r);
    }
    return pe;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pseudo-expectation JSON: ") + e.what());
  }
}

}  // namespace sosgap
