#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sosgap/boolcore.hpp"
#include "sosgap/errors.hpp"
#include "sosgap/monomial.hpp"
#include "sosgap/poly.hpp"
#include "sosgap/pseudoexp.hpp"
#include "sosgap/rational.hpp"

namespace sosgap {

// Answer a of a player encodes one bit per position; bit t set means the value -1.
inline int answer_value(unsigned a, int t) { return (a >> t & 1) ? -1 : 1; }

// One sampled verifier round: a question pair, its probability and the accept bit for
// every answer pair, packed at bit (a1 * 4 + a2).
struct GameRound {
  int q1 = 0;
  int q2 = 0;
  Rational weight;
  std::uint32_t predicate = 0;

  bool accepts(unsigned a1, unsigned a2) const { return predicate >> (a1 * 4 + a2) & 1; }
};

struct NonlocalGame {
  int nvars = 0;
  std::vector<std::array<int, 3>> q1_set;
  std::vector<std::array<int, 2>> q2_set;
  int answer_bits1 = 3;
  int answer_bits2 = 2;
  std::vector<GameRound> rounds;
  Rational alpha = 1;
  Rational beta = 0;

  // Marginal distribution over question pairs.
  std::map<std::pair<int, int>, Rational> dist() const {
    std::map<std::pair<int, int>, Rational> d;
    for (const auto& r : rounds) d[{r.q1, r.q2}] += r.weight;
    return d;
  }

  void validate() const {
    Rational total(0);
    for (const auto& r : rounds) {
      if (r.q1 < 0 || r.q1 >= static_cast<int>(q1_set.size()) || r.q2 < 0 || r.q2 >= static_cast<int>(q2_set.size()))
        throw InvalidInstance("round question out of range");
      if (r.weight < 0) throw InvalidInstance("negative round weight");
      total += r.weight;
    }
    if (total != 1) throw InvalidInstance("game distribution does not sum to 1");
  }
};

// Two clauses c, c' and positions j, j' are uniform; player 1 gets c's triple, player 2 gets
// (x_{c_j}, x_{c'_j'}) in either order. A full round (weight alpha) checks the clause on player 1's
// answers and agreement on x_{c_j}; a consistency round (weight beta) checks agreement only.
inline NonlocalGame oracularize(const XorInstance& inst, Rational alpha = 1, Rational beta = 0) {
  inst.validate();
  if (alpha < 0 || beta < 0 || alpha + beta != 1) throw ConfigError("alpha, beta must be nonnegative and sum to 1");
  NonlocalGame g;
  g.nvars = inst.n;
  g.alpha = alpha;
  g.beta = beta;
  std::map<std::array<int, 3>, int> q1_id;
  std::map<std::array<int, 2>, int> q2_id;
  auto id1 = [&](const std::array<int, 3>& q) {
    auto [it, fresh] = q1_id.emplace(q, static_cast<int>(g.q1_set.size()));
    if (fresh) g.q1_set.push_back(q);
    return it->second;
  };
  auto id2 = [&](const std::array<int, 2>& q) {
    auto [it, fresh] = q2_id.emplace(q, static_cast<int>(g.q2_set.size()));
    if (fresh) g.q2_set.push_back(q);
    return it->second;
  };
  const int m = inst.m();
  const Rational w(1, 18 * static_cast<std::int64_t>(m) * m);
  for (int c = 0; c < m; ++c) {
    const auto& cl = inst.clauses[c];
    const int q1 = id1(cl.vars);
    for (int c2 = 0; c2 < m; ++c2)
      for (int j = 0; j < 3; ++j)
        for (int j2 = 0; j2 < 3; ++j2)
          for (int order = 0; order < 2; ++order) {
            const int shared = cl.vars[j], other = inst.clauses[c2].vars[j2];
            std::array<int, 2> q{order == 0 ? shared : other, order == 0 ? other : shared};
            const int pos = order == 0 ? 0 : 1;
            const int q2 = id2(q);
            std::uint32_t full = 0, cons = 0;
            for (unsigned a1 = 0; a1 < 8; ++a1)
              for (unsigned a2 = 0; a2 < 4; ++a2) {
                bool agree = answer_value(a1, j) == answer_value(a2, pos);
                bool sim = answer_value(a1, 0) * answer_value(a1, 1) * answer_value(a1, 2) == cl.rhs;
                if (agree && sim) full |= 1u << (a1 * 4 + a2);
                if (agree) cons |= 1u << (a1 * 4 + a2);
              }
            if (alpha != 0) g.rounds.push_back({q1, q2, w * alpha, full});
            if (beta != 0) g.rounds.push_back({q1, q2, w * beta, cons});
          }
  }
  g.validate();
  return g;
}

// Winning probability when both players answer x restricted to their questions.
inline Rational honest_game_value(const NonlocalGame& g, const std::vector<int>& x) {
  validate_assignment(x, g.nvars);
  auto enc = [&](const auto& q) {
    unsigned a = 0;
    for (std::size_t t = 0; t < q.size(); ++t)
      if (x[q[t]] < 0) a |= 1u << t;
    return a;
  };
  Rational v(0);
  for (const auto& r : g.rounds)
    if (r.accepts(enc(g.q1_set[r.q1]), enc(g.q2_set[r.q2]))) v += r.weight;
  return v;
}

struct ClassicalResult {
  Rational value;
  std::vector<unsigned> strategy1;
  std::vector<unsigned> strategy2;
  std::uint64_t strategies_enumerated = 0;
};

// Exact max over deterministic strategies. Player-1 answers that score in no round of their
// question are dropped (any replacement is at least as good); the remaining player-1
// strategies are enumerated with incremental integer tallies and player 2 best-responds
// per question.
inline ClassicalResult classical_value(const NonlocalGame& g, std::uint64_t cap = std::uint64_t{1} << 26) {
  g.validate();
  std::int64_t den = 1;
  for (const auto& r : g.rounds) den = std::lcm(den, r.weight.denominator());
  const int n1 = static_cast<int>(g.q1_set.size()), n2 = static_cast<int>(g.q2_set.size());
  std::vector<std::vector<int>> rounds_of(n1);
  for (int k = 0; k < static_cast<int>(g.rounds.size()); ++k) rounds_of[g.rounds[k].q1].push_back(k);
  std::vector<std::int64_t> iw(g.rounds.size());
  for (std::size_t k = 0; k < g.rounds.size(); ++k)
    iw[k] = g.rounds[k].weight.numerator() * (den / g.rounds[k].weight.denominator());

  std::vector<std::vector<unsigned>> options(n1);
  double space = 1.0;
  for (int q = 0; q < n1; ++q) {
    for (unsigned a1 = 0; a1 < 8; ++a1) {
      bool live = false;
      for (int k : rounds_of[q])
        for (unsigned a2 = 0; a2 < 4 && !live; ++a2) live = g.rounds[k].accepts(a1, a2) && iw[k] > 0;
      if (live) options[q].push_back(a1);
    }
    if (options[q].empty()) options[q].push_back(0);
    space *= static_cast<double>(options[q].size());
  }
  if (space > static_cast<double>(cap))
    throw ResourceLimit("classical_value: " + std::to_string(space) + " player-1 strategies exceed cap");

  // contrib(q, a1) aggregated by q2: the tally vector it adds to each player-2 question.
  using Delta = std::pair<int, std::array<std::int64_t, 4>>;
  auto contrib = [&](int q, unsigned a1) {
    std::map<int, std::array<std::int64_t, 4>> acc;
    for (int k : rounds_of[q]) {
      const auto& r = g.rounds[k];
      auto& t = acc.try_emplace(r.q2, std::array<std::int64_t, 4>{0, 0, 0, 0}).first->second;
      for (unsigned a2 = 0; a2 < 4; ++a2)
        if (r.accepts(a1, a2)) t[a2] += iw[k];
    }
    return acc;
  };
  // step[q][d]: tally change when q's answer advances from option d to option d+1 (cyclically).
  std::vector<std::vector<std::vector<Delta>>> step(n1);
  std::vector<std::array<std::int64_t, 4>> tally(n2, {0, 0, 0, 0});
  for (int q = 0; q < n1; ++q) {
    const int s = static_cast<int>(options[q].size());
    step[q].resize(s);
    for (int d = 0; d < s; ++d) {
      auto from = contrib(q, options[q][d]), to = contrib(q, options[q][(d + 1) % s]);
      for (const auto& [q2, t] : to)
        for (int a2 = 0; a2 < 4; ++a2) from[q2][a2] -= t[a2];
      for (const auto& [q2, t] : from) {
        Delta dl{q2, {-t[0], -t[1], -t[2], -t[3]}};
        if (dl.second != std::array<std::int64_t, 4>{0, 0, 0, 0}) step[q][d].push_back(dl);
      }
    }
    for (const auto& [q2, t] : contrib(q, options[q][0]))
      for (int a2 = 0; a2 < 4; ++a2) tally[q2][a2] += t[a2];
  }
  auto max4 = [](const std::array<std::int64_t, 4>& t) { return std::max(std::max(t[0], t[1]), std::max(t[2], t[3])); };
  std::vector<std::int64_t> best2(n2, 0);
  std::int64_t sum_best = 0;
  for (int q2 = 0; q2 < n2; ++q2) {
    best2[q2] = max4(tally[q2]);
    sum_best += best2[q2];
  }
  std::vector<int> digit(n1, 0);
  ClassicalResult res;
  std::int64_t best = -1;
  std::vector<int> best_digit;
  while (true) {
    ++res.strategies_enumerated;
    if (sum_best > best) {
      best = sum_best;
      best_digit = digit;
    }
    int q = 0;
    for (; q < n1; ++q) {
      for (const auto& [q2, dt] : step[q][digit[q]]) {
        auto& t = tally[q2];
        for (int a2 = 0; a2 < 4; ++a2) t[a2] += dt[a2];
        const std::int64_t b = max4(t);
        sum_best += b - best2[q2];
        best2[q2] = b;
      }
      digit[q] = (digit[q] + 1) % static_cast<int>(options[q].size());
      if (digit[q] != 0) break;
    }
    if (q == n1) break;
  }
  res.value = Rational(best, den);
  res.strategy1.resize(n1);
  for (int q = 0; q < n1; ++q) res.strategy1[q] = options[q][best_digit[q]];
  std::vector<std::array<std::int64_t, 4>> t2(n2, {0, 0, 0, 0});
  for (std::size_t k = 0; k < g.rounds.size(); ++k)
    for (unsigned a2 = 0; a2 < 4; ++a2)
      if (g.rounds[k].accepts(res.strategy1[g.rounds[k].q1], a2)) t2[g.rounds[k].q2][a2] += iw[k];
  res.strategy2.resize(n2);
  for (int q2 = 0; q2 < n2; ++q2)
    res.strategy2[q2] = static_cast<unsigned>(std::max_element(t2[q2].begin(), t2[q2].end()) - t2[q2].begin());
  return res;
}

// ---------------------------------------------------------------------------
// ncSoS lift

// psi'[C_{i1} ... C_{ik}] = psi[x_{i1} ... x_{ik}]. Words are stored through their canonical
// commutative form: letters sorted, pairs cancelled by C_i^2 = I.
class NcPseudoExpectation {
 public:
  explicit NcPseudoExpectation(PseudoExpectation pe) : pe_(std::move(pe)) {}

  int nvars() const { return pe_.nvars(); }
  int degree() const { return pe_.degree(); }
  const PseudoExpectation& base() const { return pe_; }

  static Monomial canonical(const std::vector<int>& word) { return Monomial(word); }

  Rational at(const std::vector<int>& word) const {
    for (int l : word)
      if (l < 0 || l >= nvars()) throw DegreeError("word letter out of range");
    Monomial m = canonical(word);
    if (static_cast<int>(m.size()) > degree()) throw DegreeError("word reduces above the lift degree");
    return pe_.at(m);
  }

 private:
  PseudoExpectation pe_;
};

inline NcPseudoExpectation ncsos_lift(const PseudoExpectation& pe) { return NcPseudoExpectation(pe); }

// Reduced words (no two equal adjacent letters) of length <= k, shortest first.
inline std::vector<std::vector<int>> reduced_words(int n, int k) {
  std::vector<std::vector<int>> out{{}};
  std::size_t begin = 0;
  for (int len = 1; len <= k; ++len) {
    const std::size_t end = out.size();
    for (std::size_t w = begin; w < end; ++w)
      for (int l = 0; l < n; ++l) {
        if (!out[w].empty() && out[w].back() == l) continue;
        auto nw = out[w];
        nw.push_back(l);
        out.push_back(std::move(nw));
      }
    begin = end;
  }
  return out;
}

struct NcValidityReport {
  int level = 0;
  std::size_t dim = 0;
  double min_eig = 0.0;
  double tolerance = 0.0;
  // max |psi'[u C_a C_b v] - psi'[u C_b C_a v]| over words u, v of length <= k.
  Rational commutation_residual;
  // max |psi'[w] - psi'[reverse w]| over the moment matrix entries.
  Rational reversal_residual;
  Rational normalization_residual;

  bool psd_ok() const { return min_eig >= -tolerance; }
  bool valid() const {
    return psd_ok() && commutation_residual == 0 && reversal_residual == 0 && normalization_residual == 0;
  }
};

// Moment matrix M[u, v] = psi'[u^dagger v] over reduced words of length <= k.
inline NcValidityReport nc_moment_check(const NcPseudoExpectation& ncpe, int level, std::size_t dim_cap = 6000) {
  if (2 * level > ncpe.degree()) throw DegreeError("nc_moment_check: level exceeds half the lift degree");
  NcValidityReport rep;
  rep.level = level;
  auto words = reduced_words(ncpe.nvars(), level);
  if (words.size() > dim_cap) throw ResourceLimit("nc moment matrix dimension exceeds cap");
  rep.dim = words.size();
  const auto d = static_cast<Eigen::Index>(words.size());
  Eigen::MatrixXd mm(d, d);
  rep.reversal_residual = 0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      std::vector<int> w(words[a].rbegin(), words[a].rend());
      w.insert(w.end(), words[b].begin(), words[b].end());
      Rational v = ncpe.at(w);
      std::vector<int> rw(w.rbegin(), w.rend());
      rep.reversal_residual = std::max(rep.reversal_residual, abs(v - ncpe.at(rw)));
      mm(a, b) = to_double(v);
    }
  rep.min_eig = min_eigenvalue(mm);
  rep.tolerance = psd_tolerance(d);
  rep.normalization_residual = abs(ncpe.at({}) - 1);

  rep.commutation_residual = 0;
  const int n = ncpe.nvars();
  const int side = std::max(0, std::min(level, (ncpe.degree() - 2) / 2));
  auto short_words = reduced_words(n, side);
  if (short_words.size() * short_words.size() * static_cast<std::size_t>(n) * n <= (std::size_t{1} << 24)) {
    for (const auto& u : short_words)
      for (const auto& v : short_words)
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            std::vector<int> w1 = u, w2 = u;
            w1.push_back(a);
            w1.push_back(b);
            w2.push_back(b);
            w2.push_back(a);
            w1.insert(w1.end(), v.begin(), v.end());
            w2.insert(w2.end(), v.begin(), v.end());
            rep.commutation_residual = std::max(rep.commutation_residual, abs(ncpe.at(w1) - ncpe.at(w2)));
          }
  }
  return rep;
}

// Game value as a polynomial in the observables C_i: A^{a}_q = prod_t (1 + a_t C_{q_t})/2 and
// likewise for player 2, each word reduced to its canonical commutative monomial.
inline MultilinearPoly game_polynomial(const NonlocalGame& g) {
  MultilinearPoly f(g.nvars);
  for (const auto& r : g.rounds) {
    const auto& q1 = g.q1_set[r.q1];
    const auto& q2 = g.q2_set[r.q2];
    const std::array<int, 5> letters{q1[0], q1[1], q1[2], q2[0], q2[1]};
    for (unsigned s = 0; s < 32; ++s) {
      std::int64_t c = 0;
      for (unsigned a1 = 0; a1 < 8; ++a1)
        for (unsigned a2 = 0; a2 < 4; ++a2) {
          if (!r.accepts(a1, a2)) continue;
          int sign = 1;
          for (int t = 0; t < 5; ++t)
            if (s >> t & 1) sign *= t < 3 ? answer_value(a1, t) : answer_value(a2, t - 3);
          c += sign;
        }
      if (c == 0) continue;
      std::vector<int> word;
      for (int t = 0; t < 5; ++t)
        if (s >> t & 1) word.push_back(letters[t]);
      f.add_term(Monomial(word), r.weight * Rational(c, 32));
    }
  }
  return f;
}

inline Rational game_value_under_ncpe(const NonlocalGame& g, const NcPseudoExpectation& ncpe) {
  if (g.nvars != ncpe.nvars()) throw ConfigError("game and lift variable counts differ");
  return pe_eval(ncpe.base(), game_polynomial(g));
}

// 1 - gamma (1 - OPT)^2 / m^2; a reporting formula, gamma is supplied by the caller.
inline Rational entangled_upper_bound(const Rational& opt, int m, const Rational& gamma) {
  if (m < 1) throw InvalidInstance("entangled_upper_bound needs m >= 1");
  Rational gap = 1 - opt;
  return 1 - gamma * gap * gap / Rational(static_cast<std::int64_t>(m) * m);
}

// ---------------------------------------------------------------------------
// JSON: question sets, dist as a sparse list, predicates as packed bit tables.

inline nlohmann::json to_json(const NonlocalGame& g) {
  nlohmann::json j;
  j["nvars"] = g.nvars;
  j["q1_set"] = g.q1_set;
  j["q2_set"] = g.q2_set;
  j["answer_bits"] = {g.answer_bits1, g.answer_bits2};
  j["alpha"] = to_string(g.alpha);
  j["beta"] = to_string(g.beta);
  nlohmann::json dist = nlohmann::json::array();
  for (const auto& [q, p] : g.dist()) dist.push_back({q.first, q.second, to_string(p)});
  j["dist"] = dist;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : g.rounds) rounds.push_back({r.q1, r.q2, to_string(r.weight), r.predicate});
  j["rounds"] = rounds;
  return j;
}

inline NonlocalGame game_from_json(const nlohmann::json& j) {
  NonlocalGame g;
  try {
    g.nvars = j.at("nvars").get<int>();
    g.q1_set = j.at("q1_set").get<std::vector<std::array<int, 3>>>();
    g.q2_set = j.at("q2_set").get<std::vector<std::array<int, 2>>>();
    g.alpha = parse_rational(j.at("alpha").get<std::string>());
    g.beta = parse_rational(j.at("beta").get<std::string>());
    for (const auto& r : j.at("rounds"))
      g.rounds.push_back({r.at(0).get<int>(), r.at(1).get<int>(), parse_rational(r.at(2).get<std::string>()),
                          r.at(3).get<std::uint32_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("malformed game JSON: ") + e.what());
  }
  g.validate();
  return g;
}

}  // namespace sosgap
