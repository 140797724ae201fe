#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sosgap/boolcore.hpp"
#include "sosgap/errors.hpp"
#include "sosgap/poly.hpp"
#include "sosgap/random.hpp"
#include "sosgap/rational.hpp"

namespace sosgap {

enum class ClauseKind { TwoOutOfFour, Eq };

inline std::string to_string(ClauseKind k) { return k == ClauseKind::TwoOutOfFour ? "2oo4" : "eq"; }

struct Literal {
  int var = 0;
  int sign = 1;
  friend bool operator==(const Literal&, const Literal&) = default;
};

// TwoOutOfFour: exactly two of four literals are true (+1). Eq: both literals equal.
struct CspClause {
  ClauseKind kind = ClauseKind::TwoOutOfFour;
  std::vector<Literal> lits;

  bool satisfied(const std::vector<int>& y) const {
    int s = 0;
    for (const auto& l : lits) s += l.sign * y[l.var];
    return kind == ClauseKind::TwoOutOfFour ? s == 0 : (s == 2 || s == -2);
  }
  bool touches(int v) const {
    for (const auto& l : lits)
      if (l.var == v) return true;
    return false;
  }
};

struct CspInstance {
  int nvars = 0;
  std::vector<CspClause> clauses;
  int parity_bit = 0;
  // Variables 0..source_n-1 copy the 3XOR variables.
  int source_n = 0;
  // Dummy indices (y^c_1, y^c_2, y^c_3) per source clause.
  std::vector<std::array<int, 3>> dummy_map;
  // Equivalence classes created by expanderize; first entry is the original index.
  std::vector<std::vector<int>> copy_groups;
  // Pre-expanderization index of every variable.
  std::vector<int> origin;

  int m() const { return static_cast<int>(clauses.size()); }

  std::vector<int> occurrences() const {
    std::vector<int> occ(nvars, 0);
    for (const auto& c : clauses)
      for (const auto& l : c.lits) ++occ[l.var];
    return occ;
  }

  void validate() const {
    if (nvars <= 0 || clauses.empty()) throw InvalidInstance("CSP needs variables and clauses");
    if (parity_bit < 0 || parity_bit >= nvars) throw InvalidInstance("parity bit out of range");
    for (const auto& c : clauses) {
      const std::size_t want = c.kind == ClauseKind::TwoOutOfFour ? 4 : 2;
      if (c.lits.size() != want) throw InvalidInstance("clause has the wrong arity");
      for (std::size_t a = 0; a < c.lits.size(); ++a) {
        if (c.lits[a].var < 0 || c.lits[a].var >= nvars) throw InvalidInstance("literal out of range");
        if (c.lits[a].sign != 1 && c.lits[a].sign != -1) throw InvalidInstance("literal sign must be +-1");
        for (std::size_t b = 0; b < a; ++b)
          if (c.lits[a].var == c.lits[b].var) throw InvalidInstance("repeated variable in a clause");
      }
    }
    if (!origin.empty() && static_cast<int>(origin.size()) != nvars)
      throw InvalidInstance("origin map has the wrong length");
  }
};

// Target coordinate t is the polynomial components[t] of the source variables.
struct VarEmbedding {
  int source_nvars = 0;
  std::vector<MultilinearPoly> components;

  int kappa() const {
    int k = 0;
    for (const auto& p : components) k = std::max(k, p.degree());
    return k;
  }
  std::vector<Rational> apply(const std::vector<int>& x) const {
    std::vector<Rational> out;
    out.reserve(components.size());
    for (const auto& p : components) out.push_back(p.eval(x));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Gadget

namespace detail {

// Literal values of the three gadget clauses for source values p = (x_i, x_j, x_k),
// dummies y and z literal value zl.
inline int gadget_satisfied(const std::array<int, 3>& p, const std::array<int, 3>& y, int zl) {
  int s = 0;
  s += (p[0] + y[1] + y[2] + zl) == 0;
  s += (p[1] + y[0] + y[2] + zl) == 0;
  s += (p[2] + y[0] + y[1] + zl) == 0;
  return s;
}

// Dummy triple for a source pattern. Satisfying patterns follow the table:
// all-(+a) maps to all-(-a), the other three map to themselves. Violating patterns take
// the lexicographically first (-1 < +1) triple maximizing satisfied gadget clauses.
inline std::array<int, 3> dummy_values(const std::array<int, 3>& p, int rhs) {
  if (p[0] * p[1] * p[2] == rhs) {
    if (p[0] == rhs && p[1] == rhs && p[2] == rhs) return {-rhs, -rhs, -rhs};
    return p;
  }
  std::array<int, 3> best{};
  int best_s = -1;
  for (int code = 0; code < 8; ++code) {
    std::array<int, 3> y{(code & 4) ? 1 : -1, (code & 2) ? 1 : -1, (code & 1) ? 1 : -1};
    int s = gadget_satisfied(p, y, rhs);
    if (s > best_s) {
      best_s = s;
      best = y;
    }
  }
  return best;
}

inline std::array<int, 3> pattern_of(unsigned bits) {
  // Bit t set means coordinate t is -1, matching interpolate().
  return {(bits & 1) ? -1 : 1, (bits & 2) ? -1 : 1, (bits & 4) ? -1 : 1};
}

}  // namespace detail

// Gadget CSP and the degree-1 embedding valid on each clause's solution coset. Layout:
// x_i at i, y^c_t at n + 3c + t, z at n + 3m.
inline std::pair<CspInstance, VarEmbedding> xor_to_2oo4(const XorInstance& inst) {
  inst.validate();
  const int n = inst.n, m = inst.m();
  CspInstance csp;
  csp.nvars = n + 3 * m + 1;
  csp.parity_bit = n + 3 * m;
  csp.source_n = n;
  VarEmbedding emb;
  emb.source_nvars = n;
  emb.components.resize(csp.nvars, MultilinearPoly(n));
  for (int i = 0; i < n; ++i) emb.components[i] = MultilinearPoly::variable(n, i);
  emb.components[csp.parity_bit] = MultilinearPoly(n, Rational(1));

  for (int c = 0; c < m; ++c) {
    const auto& cl = inst.clauses[c];
    const std::array<int, 3> y{n + 3 * c, n + 3 * c + 1, n + 3 * c + 2};
    csp.dummy_map.push_back(y);
    const Literal z{csp.parity_bit, cl.rhs};
    auto lit = [](int v) { return Literal{v, 1}; };
    csp.clauses.push_back({ClauseKind::TwoOutOfFour, {lit(cl.vars[0]), lit(y[1]), lit(y[2]), z}});
    csp.clauses.push_back({ClauseKind::TwoOutOfFour, {lit(cl.vars[1]), lit(y[0]), lit(y[2]), z}});
    csp.clauses.push_back({ClauseKind::TwoOutOfFour, {lit(cl.vars[2]), lit(y[0]), lit(y[1]), z}});

    // On the coset x_i x_j x_k = a the characters 1, x_i, x_j, x_k form a basis, so
    // each dummy is the affine function with coefficients (1/4) sum_p y(p) chi(p).
    for (int t = 0; t < 3; ++t) {
      Rational c0(0), ci(0), cj(0), ck(0);
      for (unsigned bits = 0; bits < 8; ++bits) {
        auto p = detail::pattern_of(bits);
        if (p[0] * p[1] * p[2] != cl.rhs) continue;
        int v = detail::dummy_values(p, cl.rhs)[t];
        c0 += Rational(v, 4);
        ci += Rational(v * p[0], 4);
        cj += Rational(v * p[1], 4);
        ck += Rational(v * p[2], 4);
      }
      MultilinearPoly poly(n, c0);
      poly.add_term(Monomial{cl.vars[0]}, ci);
      poly.add_term(Monomial{cl.vars[1]}, cj);
      poly.add_term(Monomial{cl.vars[2]}, ck);
      emb.components[y[t]] = std::move(poly);
    }
  }
  csp.origin.resize(csp.nvars);
  for (int v = 0; v < csp.nvars; ++v) csp.origin[v] = v;
  csp.validate();
  return {csp, emb};
}

// Degree-3 embedding that is +-1 on the whole cube: dummies interpolate the full
// 8-pattern table, including the best-response triples on violating patterns.
inline VarEmbedding cube_embedding(const XorInstance& inst) {
  const int n = inst.n, m = inst.m();
  VarEmbedding emb;
  emb.source_nvars = n;
  emb.components.resize(n + 3 * m + 1, MultilinearPoly(n));
  for (int i = 0; i < n; ++i) emb.components[i] = MultilinearPoly::variable(n, i);
  emb.components[n + 3 * m] = MultilinearPoly(n, Rational(1));
  for (int c = 0; c < m; ++c) {
    const auto& cl = inst.clauses[c];
    std::vector<int> vars{cl.vars[0], cl.vars[1], cl.vars[2]};
    for (int t = 0; t < 3; ++t) {
      std::vector<Rational> vals(8);
      for (unsigned bits = 0; bits < 8; ++bits)
        vals[bits] = detail::dummy_values(detail::pattern_of(bits), cl.rhs)[t];
      emb.components[n + 3 * c + t] = interpolate(n, vars, vals);
    }
  }
  return emb;
}

// CSP assignment of the gadget instance for source x (z = +1).
inline std::vector<int> embed_assignment(const XorInstance& inst, const std::vector<int>& x) {
  validate_assignment(x, inst.n);
  const int n = inst.n, m = inst.m();
  std::vector<int> y(n + 3 * m + 1, 1);
  std::copy(x.begin(), x.end(), y.begin());
  for (int c = 0; c < m; ++c) {
    const auto& cl = inst.clauses[c];
    auto d = detail::dummy_values({x[cl.vars[0]], x[cl.vars[1]], x[cl.vars[2]]}, cl.rhs);
    for (int t = 0; t < 3; ++t) y[n + 3 * c + t] = d[t];
  }
  return y;
}

// ---------------------------------------------------------------------------
// Expanderization

struct Graph {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;
};

inline bool is_connected(const Graph& g) {
  if (g.nodes == 0) return true;
  std::vector<std::vector<int>> adj(g.nodes);
  for (auto [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(g.nodes, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == g.nodes;
}

// max_{i >= 2} |lambda_i| of the adjacency matrix, eigenvalues sorted descending.
inline double second_eigenvalue_modulus(const Graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.nodes, g.nodes);
  for (auto [u, v] : g.edges) a(u, v) = a(v, u) = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  double worst = 0.0;
  for (Eigen::Index i = 0; i + 1 < ev.size(); ++i) worst = std::max(worst, std::abs(ev(i)));
  return worst;
}

// Simple graph on t >= 5 nodes, every degree 3 (t even) or all but node t-1 (t odd),
// sampled by the pairing model and resampled until connected with second eigenvalue
// modulus <= bound.
inline Graph certified_cubic_graph(int t, Rng& rng, double bound = 2.9, int retries = 2000) {
  if (t < 5) throw GenerationError("cubic expander needs at least 5 nodes");
  for (int attempt = 0; attempt < retries; ++attempt) {
    std::vector<int> stubs;
    for (int v = 0; v < t; ++v)
      for (int k = 0; k < ((t % 2 && v == t - 1) ? 2 : 3); ++k) stubs.push_back(v);
    shuffle(stubs, rng);
    Graph g{t, {}};
    bool simple = true;
    for (std::size_t s = 0; s < stubs.size() && simple; s += 2) {
      int a = std::min(stubs[s], stubs[s + 1]), b = std::max(stubs[s], stubs[s + 1]);
      if (a == b || std::find(g.edges.begin(), g.edges.end(), std::make_pair(a, b)) != g.edges.end())
        simple = false;
      else
        g.edges.emplace_back(a, b);
    }
    if (!simple || !is_connected(g)) continue;
    if (second_eigenvalue_modulus(g) <= bound) {
      std::sort(g.edges.begin(), g.edges.end());
      return g;
    }
  }
  throw GenerationError("no certified cubic expander on " + std::to_string(t) + " nodes");
}

// Splits every variable with more than 4 occurrences into one copy per occurrence,
// tied together by EQ clauses along a certified cubic expander.
inline CspInstance expanderize(const CspInstance& csp, std::uint64_t seed = 0) {
  csp.validate();
  Rng rng(seed);
  CspInstance out = csp;
  out.clauses.clear();
  out.copy_groups.clear();
  if (out.origin.empty()) {
    out.origin.resize(csp.nvars);
    for (int v = 0; v < csp.nvars; ++v) out.origin[v] = v;
  }
  auto occ = csp.occurrences();
  // Fresh index for the k-th occurrence of each split variable.
  std::vector<std::vector<int>> copy_index(csp.nvars);
  for (int v = 0; v < csp.nvars; ++v) {
    if (occ[v] <= 4) continue;
    copy_index[v].push_back(v);
    for (int k = 1; k < occ[v]; ++k) {
      copy_index[v].push_back(out.nvars++);
      out.origin.push_back(out.origin[v]);
    }
    out.copy_groups.push_back(copy_index[v]);
  }
  std::vector<int> seen(csp.nvars, 0);
  for (auto c : csp.clauses) {
    for (auto& l : c.lits)
      if (!copy_index[l.var].empty()) l.var = copy_index[l.var][seen[l.var]++];
    out.clauses.push_back(std::move(c));
  }
  for (const auto& group : out.copy_groups) {
    Graph g = certified_cubic_graph(static_cast<int>(group.size()), rng);
    for (auto [a, b] : g.edges)
      out.clauses.push_back({ClauseKind::Eq, {Literal{group[a], 1}, Literal{group[b], 1}}});
  }
  out.validate();
  return out;
}

// Expanded assignment: every copy takes its original's value.
inline std::vector<int> lift_to_expanded(const CspInstance& expanded, const std::vector<int>& y) {
  std::vector<int> out(expanded.nvars);
  for (int v = 0; v < expanded.nvars; ++v) out[v] = y.at(expanded.origin[v]);
  return out;
}

// Embedding into the expanded instance: copies share their original's polynomial.
inline VarEmbedding lift_embedding(const CspInstance& expanded, const VarEmbedding& emb) {
  VarEmbedding out;
  out.source_nvars = emb.source_nvars;
  for (int v = 0; v < expanded.nvars; ++v) out.components.push_back(emb.components.at(expanded.origin[v]));
  return out;
}

// ---------------------------------------------------------------------------
// Polynomials

// Exactly-two-true over literal values l: (3 - e_2(l) + 3 e_4(l)) / 8. Eq: (1 + l_a l_b)/2.
inline MultilinearPoly clause_indicator(const CspClause& c, int nvars) {
  MultilinearPoly p(nvars);
  if (c.kind == ClauseKind::Eq) {
    p.add_term(Monomial{}, Rational(1, 2));
    p.add_term(Monomial({c.lits[0].var, c.lits[1].var}), Rational(c.lits[0].sign * c.lits[1].sign, 2));
    return p;
  }
  p.add_term(Monomial{}, Rational(3, 8));
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      p.add_term(Monomial({c.lits[a].var, c.lits[b].var}),
                 Rational(-c.lits[a].sign * c.lits[b].sign, 8));
  int s = 1;
  for (const auto& l : c.lits) s *= l.sign;
  p.add_term(Monomial({c.lits[0].var, c.lits[1].var, c.lits[2].var, c.lits[3].var}), Rational(3 * s, 8));
  return p;
}

inline MultilinearPoly csp_to_poly(const CspInstance& csp) {
  MultilinearPoly f(csp.nvars);
  for (const auto& c : csp.clauses) f += clause_indicator(c, csp.nvars);
  f *= Rational(1, csp.m());
  return f;
}

// Indicator minus one for every clause.
inline std::vector<MultilinearPoly> csp_constraints(const CspInstance& csp) {
  std::vector<MultilinearPoly> out;
  for (const auto& c : csp.clauses) out.push_back(clause_indicator(c, csp.nvars) - MultilinearPoly(csp.nvars, 1));
  return out;
}

// Sum of literals of each 2oo4 clause; vanishes exactly on its satisfying assignments.
inline std::vector<MultilinearPoly> literal_sum_constraints(const CspInstance& csp) {
  std::vector<MultilinearPoly> out;
  for (const auto& c : csp.clauses) {
    if (c.kind != ClauseKind::TwoOutOfFour) continue;
    MultilinearPoly p(csp.nvars);
    for (const auto& l : c.lits) p.add_term(Monomial{l.var}, l.sign);
    out.push_back(std::move(p));
  }
  return out;
}

inline int csp_satisfied(const CspInstance& csp, const std::vector<int>& y) {
  int s = 0;
  for (const auto& c : csp.clauses) s += c.satisfied(y);
  return s;
}

inline Rational csp_eval(const CspInstance& csp, const std::vector<int>& y) {
  validate_assignment(y, csp.nvars);
  return Rational(csp_satisfied(csp, y), csp.m());
}

// ---------------------------------------------------------------------------
// Exact optimum

struct CspOptResult {
  Rational value;
  std::vector<int> witness;
};

// Enumerates the non-dummy variables; each clause's dummy triple occurs only in its own
// gadget, so it is maximized independently over its 8 values. Ties: first enumerated.
inline CspOptResult csp_opt(const CspInstance& csp, int cap = 24) {
  csp.validate();
  std::vector<int> dummy_group(csp.nvars, -1);
  for (int g = 0; g < static_cast<int>(csp.dummy_map.size()); ++g)
    for (int v : csp.dummy_map[g]) dummy_group[v] = g;
  std::vector<int> core;
  for (int v = 0; v < csp.nvars; ++v)
    if (dummy_group[v] < 0) core.push_back(v);
  if (static_cast<int>(core.size()) > cap)
    throw ResourceLimit("csp_opt: " + std::to_string(core.size()) + " core variables exceed cap " +
                        std::to_string(cap));
  const int groups = static_cast<int>(csp.dummy_map.size());
  std::vector<std::vector<int>> group_clauses(groups);
  std::vector<int> plain;
  for (int c = 0; c < csp.m(); ++c) {
    int g = -1;
    for (const auto& l : csp.clauses[c].lits)
      if (dummy_group[l.var] >= 0) {
        if (g >= 0 && g != dummy_group[l.var]) throw InvalidInstance("clause spans two dummy groups");
        g = dummy_group[l.var];
      }
    (g < 0 ? plain : group_clauses[g]).push_back(c);
  }
  std::vector<int> y(csp.nvars, 1);
  int best = -1;
  std::vector<int> best_y;
  const std::uint64_t total = std::uint64_t{1} << core.size();
  for (std::uint64_t code = 0; code < total; ++code) {
    for (std::size_t k = 0; k < core.size(); ++k) y[core[k]] = (code >> k & 1) ? 1 : -1;
    int s = 0;
    for (int c : plain) s += csp.clauses[c].satisfied(y);
    for (int g = 0; g < groups; ++g) {
      int gbest = -1, gcode = 0;
      for (int dc = 0; dc < 8; ++dc) {
        for (int t = 0; t < 3; ++t) y[csp.dummy_map[g][t]] = (dc >> (2 - t) & 1) ? 1 : -1;
        int gs = 0;
        for (int c : group_clauses[g]) gs += csp.clauses[c].satisfied(y);
        if (gs > gbest) {
          gbest = gs;
          gcode = dc;
        }
      }
      for (int t = 0; t < 3; ++t) y[csp.dummy_map[g][t]] = (gcode >> (2 - t) & 1) ? 1 : -1;
      s += gbest;
    }
    if (s > best) {
      best = s;
      best_y = y;
    }
  }
  return {Rational(best, csp.m()), best_y};
}

struct SoundnessReport {
  Rational opt_source;
  Rational delta;
  Rational opt_gadget;
  Rational gadget_bound;  // 1 - delta/3
  bool gadget_sound = false;
  Rational opt_expanded;
  // (1 - OPT(expanded)) / delta, 0 when delta = 0.
  Rational eta;
  bool expanded_sound = false;
  int gadget_clauses = 0;
  int expanded_clauses = 0;
};

inline SoundnessReport soundness_probe(const XorInstance& inst, const CspInstance& gadget,
                                       const CspInstance& expanded, int cap = 24) {
  SoundnessReport r;
  r.opt_source = brute_force_opt(inst, cap).value;
  r.delta = 1 - r.opt_source;
  r.opt_gadget = csp_opt(gadget, cap).value;
  r.gadget_bound = 1 - r.delta / 3;
  r.gadget_sound = r.opt_gadget <= r.gadget_bound;
  r.opt_expanded = csp_opt(expanded, cap).value;
  if (r.delta > 0) {
    r.eta = (1 - r.opt_expanded) / r.delta;
    r.expanded_sound = r.eta > 0;
  } else {
    r.eta = 0;
    r.expanded_sound = r.opt_expanded == 1;
  }
  r.gadget_clauses = gadget.m();
  r.expanded_clauses = expanded.m();
  return r;
}

inline nlohmann::json to_json(const SoundnessReport& r) {
  return {{"opt_source", to_string(r.opt_source)},     {"delta", to_string(r.delta)},
          {"opt_gadget", to_string(r.opt_gadget)},     {"gadget_bound", to_string(r.gadget_bound)},
          {"gadget_sound", r.gadget_sound},            {"opt_expanded", to_string(r.opt_expanded)},
          {"eta", to_string(r.eta)},                   {"expanded_sound", r.expanded_sound},
          {"gadget_clauses", r.gadget_clauses},        {"expanded_clauses", r.expanded_clauses}};
}

// ---------------------------------------------------------------------------
// JSON: {"nvars", "clauses": [{"kind", "lits": [[idx, sign], ...]}], "parity_bit", "copy_groups"}
// plus the layout fields needed to rebuild the embedding.

inline nlohmann::json to_json(const CspInstance& csp) {
  nlohmann::json j;
  j["nvars"] = csp.nvars;
  j["clauses"] = nlohmann::json::array();
  for (const auto& c : csp.clauses) {
    nlohmann::json lits = nlohmann::json::array();
    for (const auto& l : c.lits) lits.push_back({l.var, l.sign});
    j["clauses"].push_back({{"kind", to_string(c.kind)}, {"lits", lits}});
  }
  j["parity_bit"] = csp.parity_bit;
  j["copy_groups"] = csp.copy_groups;
  j["source_n"] = csp.source_n;
  j["dummy_map"] = csp.dummy_map;
  j["origin"] = csp.origin;
  return j;
}

inline CspInstance csp_from_json(const nlohmann::json& j) {
  CspInstance csp;
  try {
    csp.nvars = j.at("nvars").get<int>();
    for (const auto& c : j.at("clauses")) {
      CspClause cl;
      auto kind = c.at("kind").get<std::string>();
      if (kind == "2oo4") cl.kind = ClauseKind::TwoOutOfFour;
      else if (kind == "eq") cl.kind = ClauseKind::Eq;
      else throw InvalidInstance("unknown clause kind '" + kind + "'");
      for (const auto& l : c.at("lits")) cl.lits.push_back({l.at(0).get<int>(), l.at(1).get<int>()});
      csp.clauses.push_back(std::move(cl));
    }
    csp.parity_bit = j.at("parity_bit").get<int>();
    if (j.contains("copy_groups")) csp.copy_groups = j["copy_groups"].get<std::vector<std::vector<int>>>();
    if (j.contains("source_n")) csp.source_n = j["source_n"].get<int>();
    if (j.contains("dummy_map")) csp.dummy_map = j["dummy_map"].get<std::vector<std::array<int, 3>>>();
    if (j.contains("origin")) csp.origin = j["origin"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("malformed CSP JSON: ") + e.what());
  }
  csp.validate();
  return csp;
}

}  // namespace sosgap
