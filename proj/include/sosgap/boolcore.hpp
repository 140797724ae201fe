#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sosgap/errors.hpp"
#include "sosgap/random.hpp"
#include "sosgap/rational.hpp"

namespace sosgap {

// x_i x_j x_k = rhs over {+1,-1} variables.
struct XorClause {
  std::array<int, 3> vars{};
  int rhs = 1;
};

struct XorInstance {
  int n = 0;
  std::vector<XorClause> clauses;
  std::optional<std::uint64_t> seed;

  int m() const { return static_cast<int>(clauses.size()); }

  void validate() const {
    if (n < 3) throw InvalidInstance("3XOR instance needs n >= 3");
    if (clauses.empty()) throw InvalidInstance("3XOR instance has no clauses");
    for (const auto& c : clauses) {
      for (int v : c.vars)
        if (v < 0 || v >= n) throw InvalidInstance("clause index out of range");
      if (c.vars[0] == c.vars[1] || c.vars[0] == c.vars[2] || c.vars[1] == c.vars[2])
        throw InvalidInstance("clause indices must be distinct");
      if (c.rhs != 1 && c.rhs != -1) throw InvalidInstance("clause rhs must be +1 or -1");
    }
  }
};

inline void validate_assignment(const std::vector<int>& x, int n) {
  if (static_cast<int>(x.size()) != n)
    throw InvalidAssignment("assignment has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(n));
  for (int v : x)
    if (v != 1 && v != -1) throw InvalidAssignment("assignment entries must be +1 or -1");
}

inline bool clause_satisfied(const XorClause& c, const std::vector<int>& x) {
  return x[c.vars[0]] * x[c.vars[1]] * x[c.vars[2]] == c.rhs;
}

inline int count_satisfied(const XorInstance& inst, const std::vector<int>& x) {
  int s = 0;
  for (const auto& c : inst.clauses) s += clause_satisfied(c, x);
  return s;
}

// Fraction of satisfied clauses, (1/m) sum_C (1 + a_C x_i x_j x_k)/2.
inline Rational eval_3xor(const XorInstance& inst, const std::vector<int>& x) {
  validate_assignment(x, inst.n);
  return Rational(count_satisfied(inst, x), inst.m());
}

// ---------------------------------------------------------------------------
// Generators

enum class GenMode { Random, Planted, Linear, Petersen };

inline GenMode parse_gen_mode(const std::string& s) {
  if (s == "random") return GenMode::Random;
  if (s == "planted" || s == "planted-satisfiable") return GenMode::Planted;
  if (s == "linear") return GenMode::Linear;
  if (s == "petersen") return GenMode::Petersen;
  throw ConfigError("unknown generation mode '" + s + "'");
}

inline std::string to_string(GenMode m) {
  switch (m) {
    case GenMode::Random: return "random";
    case GenMode::Planted: return "planted";
    case GenMode::Linear: return "linear";
    case GenMode::Petersen: return "petersen";
  }
  return "?";
}

// Tseitin parity system of a cubic graph: one variable per edge, one clause per
// vertex. Unsatisfiable iff the number of odd vertices is odd (connected graph).
inline XorInstance tseitin_3xor(int vertices, const std::vector<std::pair<int, int>>& edges,
                                const std::vector<int>& odd_vertices) {
  std::vector<std::vector<int>> incident(vertices);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    incident.at(edges[e].first).push_back(e);
    incident.at(edges[e].second).push_back(e);
  }
  XorInstance inst;
  inst.n = static_cast<int>(edges.size());
  for (int v = 0; v < vertices; ++v) {
    if (incident[v].size() != 3) throw InvalidInstance("Tseitin 3XOR needs a cubic graph");
    XorClause c;
    c.vars = {incident[v][0], incident[v][1], incident[v][2]};
    std::sort(c.vars.begin(), c.vars.end());
    c.rhs = 1;
    for (int o : odd_vertices)
      if (o == v) c.rhs = -c.rhs;
    inst.clauses.push_back(c);
  }
  inst.validate();
  return inst;
}

inline std::vector<std::pair<int, int>> petersen_edges() {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 5; ++i) e.emplace_back(i, (i + 1) % 5);
  for (int i = 0; i < 5; ++i) e.emplace_back(5 + i, 5 + (i + 2) % 5);
  for (int i = 0; i < 5; ++i) e.emplace_back(i, 5 + i);
  return e;
}

namespace detail {

inline XorClause random_triple(int n, Rng& rng) {
  auto t = sample_distinct(n, 3, rng);
  return XorClause{{t[0], t[1], t[2]}, 1};
}

inline int shared_vars(const XorClause& a, const XorClause& b) {
  int s = 0;
  for (int u : a.vars)
    for (int v : b.vars) s += (u == v);
  return s;
}

}  // namespace detail

// Deterministic for a fixed seed. Linear mode keeps every pair of clauses
// sharing at most one variable; Petersen mode needs n = 15, m = 10 and uses the
// seed for the odd vertex and a sign gauge.
inline XorInstance gen_3xor(int n, int m, GenMode mode, std::uint64_t seed) {
  if (n < 3) throw InvalidInstance("gen_3xor needs n >= 3");
  if (m < 1) throw InvalidInstance("gen_3xor needs m >= 1");
  Rng rng(seed);
  XorInstance inst;
  inst.n = n;
  inst.seed = seed;

  switch (mode) {
    case GenMode::Random:
      for (int k = 0; k < m; ++k) {
        auto c = detail::random_triple(n, rng);
        c.rhs = random_sign(rng);
        inst.clauses.push_back(c);
      }
      break;
    case GenMode::Planted: {
      std::vector<int> hidden(n);
      for (auto& v : hidden) v = random_sign(rng);
      for (int k = 0; k < m; ++k) {
        auto c = detail::random_triple(n, rng);
        c.rhs = hidden[c.vars[0]] * hidden[c.vars[1]] * hidden[c.vars[2]];
        inst.clauses.push_back(c);
      }
      break;
    }
    case GenMode::Linear: {
      constexpr int kRestarts = 200, kTries = 20000;
      bool done = false;
      for (int r = 0; r < kRestarts && !done; ++r) {
        inst.clauses.clear();
        while (static_cast<int>(inst.clauses.size()) < m) {
          bool placed = false;
          for (int t = 0; t < kTries && !placed; ++t) {
            auto c = detail::random_triple(n, rng);
            bool ok = true;
            for (const auto& d : inst.clauses)
              if (detail::shared_vars(c, d) > 1) { ok = false; break; }
            if (ok) {
              c.rhs = random_sign(rng);
              inst.clauses.push_back(c);
              placed = true;
            }
          }
          if (!placed) break;
        }
        done = static_cast<int>(inst.clauses.size()) == m;
      }
      if (!done)
        throw GenerationError("no linear 3-uniform hypergraph with n=" + std::to_string(n) +
                              ", m=" + std::to_string(m) + " found");
      break;
    }
    case GenMode::Petersen: {
      if (n != 15 || m != 10) throw InvalidInstance("petersen mode needs n=15, m=10");
      int odd = static_cast<int>(uniform_below(rng, 10));
      inst = tseitin_3xor(10, petersen_edges(), {odd});
      inst.seed = seed;
      for (int v = 0; v < n; ++v) {
        if (random_sign(rng) > 0) continue;
        for (auto& c : inst.clauses)
          if (c.vars[0] == v || c.vars[1] == v || c.vars[2] == v) c.rhs = -c.rhs;
      }
      break;
    }
  }
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// Exact optimum

struct OptResult {
  Rational value;
  std::vector<int> witness;
  int satisfied = 0;
};

// Exhaustive over 2^n assignments in Gray-code order. Ties go to the
// lexicographically smallest assignment with -1 < +1.
inline OptResult brute_force_opt(const XorInstance& inst, int cap = 24) {
  inst.validate();
  if (inst.n > cap || inst.n > 30)
    throw ResourceLimit("brute_force_opt: n=" + std::to_string(inst.n) + " exceeds cap " +
                        std::to_string(cap));
  const int n = inst.n;
  // Bit (n-1-i) of the code set means x_i = +1, so numeric order is lexicographic order.
  auto bit_of = [n](int var) { return std::uint32_t{1} << (n - 1 - var); };
  std::vector<std::vector<int>> occ(n);
  std::vector<std::uint32_t> masks;
  for (int c = 0; c < inst.m(); ++c) {
    std::uint32_t mk = 0;
    for (int v : inst.clauses[c].vars) {
      mk |= bit_of(v);
      occ[v].push_back(c);
    }
    masks.push_back(mk);
  }
  auto sat = [&](int c, std::uint32_t code) {
    int minus = 3 - std::popcount(code & masks[c]);
    return ((minus % 2) ? -1 : 1) == inst.clauses[c].rhs;
  };
  std::uint32_t code = 0;
  std::vector<char> cs(inst.m());
  int count = 0;
  for (int c = 0; c < inst.m(); ++c) count += (cs[c] = sat(c, code));
  int best = count;
  std::uint32_t best_code = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    int flip_bit = std::countr_zero(k);
    code ^= std::uint32_t{1} << flip_bit;
    int var = n - 1 - flip_bit;
    for (int c : occ[var]) {
      count -= cs[c];
      count += (cs[c] = sat(c, code));
    }
    if (count > best || (count == best && code < best_code)) {
      best = count;
      best_code = code;
    }
  }
  OptResult r;
  r.witness.resize(n);
  for (int i = 0; i < n; ++i) r.witness[i] = (best_code & bit_of(i)) ? 1 : -1;
  r.satisfied = best;
  r.value = Rational(best, inst.m());
  return r;
}

// ---------------------------------------------------------------------------
// Width-bounded GF(2) closure

using Gf2Support = std::vector<std::uint64_t>;

struct Gf2SupportHash {
  std::size_t operator()(const Gf2Support& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto w : s) {
      h ^= w;
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// Sum of clause equations: support is the symmetric difference of clause supports,
// rhs is the XOR of clause bits (+1 -> 0, -1 -> 1).
struct Gf2Equation {
  Gf2Support support;
  bool rhs = false;

  int weight() const {
    int w = 0;
    for (auto x : support) w += std::popcount(x);
    return w;
  }
  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::size_t w = 0; w < support.size(); ++w)
      for (std::uint64_t x = support[w]; x; x &= x - 1)
        out.push_back(static_cast<int>(w * 64 + std::countr_zero(x)));
    return out;
  }
};

struct ClosureResult {
  int width = 0;
  std::vector<Gf2Equation> equations;
  bool contradiction = false;
  bool truncated = false;
};

inline Gf2Support support_of(const std::vector<int>& idx, int n) {
  Gf2Support s((n + 63) / 64, 0);
  for (int i : idx) s[i / 64] ^= std::uint64_t{1} << (i % 64);
  return s;
}

// Fixpoint of pairwise XOR under the support-size guard. Every pair (i, j) with
// i < j is combined once, when equation j is processed.
inline ClosureResult gf2_closure(const XorInstance& inst, int width, std::size_t budget = 1'000'000) {
  inst.validate();
  if (width < 3) throw DegreeError("gf2_closure needs width >= 3");
  ClosureResult res;
  res.width = width;
  std::unordered_map<Gf2Support, bool, Gf2SupportHash> seen;
  auto& eqs = res.equations;
  auto insert = [&](Gf2Support s, bool rhs) {
    auto it = seen.find(s);
    if (it != seen.end()) {
      if (it->second != rhs) res.contradiction = true;
      return;
    }
    seen.emplace(s, rhs);
    eqs.push_back(Gf2Equation{std::move(s), rhs});
  };
  for (const auto& c : inst.clauses) {
    insert(support_of({c.vars[0], c.vars[1], c.vars[2]}, inst.n), c.rhs == -1);
    if (res.contradiction) return res;
  }
  const std::size_t words = (inst.n + 63) / 64;
  Gf2Support buf(words);
  for (std::size_t k = 0; k < eqs.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      int w = 0;
      for (std::size_t t = 0; t < words; ++t) {
        buf[t] = eqs[k].support[t] ^ eqs[j].support[t];
        w += std::popcount(buf[t]);
      }
      if (w > width) continue;
      bool rhs = eqs[k].rhs != eqs[j].rhs;
      if (w == 0) {
        if (rhs) {
          res.contradiction = true;
          return res;
        }
        continue;
      }
      insert(buf, rhs);
      if (res.contradiction) return res;
      if (eqs.size() > budget) {
        res.truncated = true;
        return res;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// JSON: {"n": int, "clauses": [[i,j,k,rhs], ...], "seed": int}

inline nlohmann::json to_json(const XorInstance& inst) {
  nlohmann::json j;
  j["n"] = inst.n;
  j["clauses"] = nlohmann::json::array();
  for (const auto& c : inst.clauses)
    j["clauses"].push_back({c.vars[0], c.vars[1], c.vars[2], c.rhs});
  if (inst.seed) j["seed"] = *inst.seed;
  return j;
}

inline XorInstance xor_instance_from_json(const nlohmann::json& j) {
  XorInstance inst;
  try {
    inst.n = j.at("n").get<int>();
    for (const auto& c : j.at("clauses")) {
      if (!c.is_array() || c.size() != 4) throw InvalidInstance("clause must be [i,j,k,rhs]");
      inst.clauses.push_back(
          XorClause{{c[0].get<int>(), c[1].get<int>(), c[2].get<int>()}, c[3].get<int>()});
    }
    if (j.contains("seed") && !j["seed"].is_null()) inst.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("malformed instance JSON: ") + e.what());
  }
  inst.validate();
  return inst;
}

}  // namespace sosgap
