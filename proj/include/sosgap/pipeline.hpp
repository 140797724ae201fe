#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "sosgap/boolcore.hpp"
#include "sosgap/errors.hpp"
#include "sosgap/games.hpp"
#include "sosgap/protocol.hpp"
#include "sosgap/pseudoexp.hpp"
#include "sosgap/qstate.hpp"
#include "sosgap/reduce.hpp"

namespace sosgap {

struct RunConfig {
  std::uint64_t seed = 1;
  int n = 15;
  int m = 10;
  GenMode mode = GenMode::Petersen;
  std::optional<int> degree;
  int copies = 1;
  int level = 1;
  std::array<Rational, 4> weights{Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)};
  int reps = 1;
  Rational gamma = 1;
  Rational alpha = 1;
  Rational beta = 0;
  std::size_t cap_dim = kDefaultDimCap;
  int cap_brute = 20;
  std::uint64_t cap_strategies = std::uint64_t{1} << 26;
  // PSD, DPS and path-agreement tolerance.
  double tolerance = 1e-9;
  double accept_tolerance = 1e-8;
  double norm_tolerance = 1e-4;
  bool check_pushed = true;
  std::optional<std::string> instance_path;
  std::optional<std::string> pe_path;

  void validate() const {
    if (tolerance <= 0 || accept_tolerance <= 0 || norm_tolerance <= 0) throw ConfigError("tolerances must be > 0");
    if (copies < 1) throw ConfigError("copies must be >= 1");
    if (level < copies) throw ConfigError("level must be >= copies");
    if (reps < 1) throw ConfigError("repetitions must be >= 1");
    if (cap_dim < 1 || cap_brute < 1 || cap_strategies < 1) throw ConfigError("caps must be positive");
    if (gamma < 0) throw ConfigError("gamma must be nonnegative");
    if (alpha < 0 || beta < 0 || alpha + beta != 1) throw ConfigError("alpha, beta must be nonnegative and sum to 1");
    Rational total(0);
    for (const auto& w : weights) {
      if (w < 0) throw ConfigError("test weights must be nonnegative");
      total += w;
    }
    if (total != 1) throw ConfigError("test weights must sum to 1");
    if (degree && *degree < 0) throw ConfigError("degree must be nonnegative");
  }
};

// An error raised inside a pipeline stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class Verdict { Pass, Fail, NotAGap };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::NotAGap: return "NOT-A-GAP";
  }
  return "FAIL";
}

struct GapReport {
  std::string kind;
  Verdict verdict = Verdict::Fail;
  double pseudo_value = 0.0;
  double true_value = 0.0;
  std::string oracle;
  // First violated check as "name: value (tolerance t)"; empty on PASS.
  std::string first_failure;
  nlohmann::json details;
  // Everything that differs between identical runs: wall clock and stage timings.
  nlohmann::json timestamp;

  double margin() const { return pseudo_value - true_value; }
  int exit_code() const { return verdict == Verdict::Pass ? 0 : 1; }

  nlohmann::json to_json() const {
    return {{"kind", kind},
            {"verdict", to_string(verdict)},
            {"pseudo_value", pseudo_value},
            {"true_value", true_value},
            {"oracle", oracle},
            {"margin", margin()},
            {"first_failure", first_failure},
            {"details", details},
            {"timestamp", timestamp}};
  }
};

// FNV-1a of the compact JSON dump.
inline std::string digest(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInstance("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance("malformed JSON in " + path + ": " + e.what());
  }
}

namespace detail {

class StageRunner {
 public:
  explicit StageRunner(GapReport& rep) : rep_(rep), start_(std::chrono::steady_clock::now()) {
    rep_.timestamp["started_unix"] = static_cast<std::int64_t>(std::time(nullptr));
    rep_.timestamp["stages"] = nlohmann::json::object();
  }

  // Runs fn; resource limits keep their type so callers can map them to their own exit code.
  template <class F>
  auto operator()(const std::string& stage, F&& fn) -> decltype(fn()) {
    auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      auto& slot = rep_.timestamp["stages"][stage];
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      slot = (slot.is_number() ? slot.get<double>() : 0.0) + dt;
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record();
      } else {
        auto r = fn();
        record();
        return r;
      }
    } catch (const ResourceLimit& e) {
      throw ResourceLimit("[" + stage + "] " + e.what());
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  void finish() {
    rep_.timestamp["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  GapReport& rep_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt_check(const std::string& name, const std::string& value, const std::string& tol) {
  return name + ": " + value + " (tolerance " + tol + ")";
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

inline XorInstance load_or_generate(const RunConfig& cfg) {
  if (cfg.instance_path) return xor_instance_from_json(read_json_file(*cfg.instance_path));
  return gen_3xor(cfg.n, cfg.m, cfg.mode, cfg.seed);
}

// The given or loaded pe, else Grigoriev's at the requested degree, else at the largest
// consistent degree up to `auto_cap`.
inline PseudoExpectation obtain_pe(const RunConfig& cfg, const XorInstance& inst, int auto_cap) {
  if (cfg.pe_path) {
    auto pe = pe_from_json(read_json_file(*cfg.pe_path));
    if (pe.nvars() != inst.n) throw InvalidInstance("pe variable count does not match the instance");
    return pe;
  }
  if (cfg.degree) return grigoriev_pe(inst, *cfg.degree);
  auto d = max_grigoriev_degree(inst, auto_cap);
  if (!d) throw DegreeError("no consistent Grigoriev degree >= 3 for this instance");
  return grigoriev_pe(inst, *d);
}

inline nlohmann::json instance_summary(const XorInstance& inst) {
  auto j = to_json(inst);
  return {{"n", inst.n}, {"m", inst.m()}, {"seed", inst.seed ? nlohmann::json(*inst.seed) : nlohmann::json()},
          {"digest", digest(j)}};
}

// gen/reload -> Grigoriev pe -> 2oo4 gadget -> expanderize -> pushforward -> protocol accept
// (polynomial and matrix paths) and honest sweep -> DPS certificate.
inline GapReport run_gap(const RunConfig& cfg) {
  cfg.validate();
  GapReport rep;
  rep.kind = "gap";
  rep.oracle = "honest_sweep";
  detail::StageRunner stage(rep);
  auto& d = rep.details;

  auto inst = stage("instance", [&] { return load_or_generate(cfg); });
  d["instance"] = instance_summary(inst);

  auto pe = stage("pe", [&] { return obtain_pe(cfg, inst, 4 * cfg.level); });
  auto source_check = stage("pe", [&] { return check_pe(pe, xor_constraints(inst)); });
  Rational objective = stage("pe", [&] { return pe_eval(pe, xor_objective(inst)); });
  d["pe"] = {{"degree", pe.degree()}, {"objective", to_string(objective)}, {"validity", to_json(source_check)},
             {"digest", digest(to_json(pe))}};

  auto [gadget, emb] = stage("reduce", [&] { return xor_to_2oo4(inst); });
  auto expanded = stage("reduce", [&] { return expanderize(gadget, cfg.seed); });
  d["csp"] = {{"gadget_vars", gadget.nvars},   {"gadget_clauses", gadget.m()},
              {"expanded_vars", expanded.nvars}, {"expanded_clauses", expanded.m()},
              {"kappa", emb.kappa()},           {"digest", digest(to_json(expanded))}};

  auto pushed = stage("pushforward", [&] { return pushforward(pe, lift_embedding(expanded, emb).components); });
  std::optional<ValidityReport> pushed_check;
  if (cfg.check_pushed) {
    pushed_check = stage("feasibility", [&] {
      auto cons = csp_constraints(expanded);
      auto sums = literal_sum_constraints(expanded);
      cons.insert(cons.end(), sums.begin(), sums.end());
      return check_pe(pushed, cons);
    });
    d["pushed_validity"] = to_json(*pushed_check);
  }
  d["pushed_degree"] = pushed.degree();

  auto params = stage("protocol", [&] {
    auto p = make_params(expanded, cfg.copies, cfg.weights, cfg.reps);
    p.cap = cfg.cap_dim;
    return p;
  });
  auto acc_poly = stage("protocol", [&] { return accept_probability(expanded, &pushed, params, EvalPath::Polynomial); });
  auto acc_mat = stage("protocol", [&] { return accept_probability(expanded, &pushed, params, EvalPath::Matrix); });
  const double path_gap = std::abs(acc_poly.total - acc_mat.total);
  d["accept"] = {{"polynomial", to_json(acc_poly)}, {"matrix", to_json(acc_mat)}, {"path_difference", path_gap}};

  auto opt = stage("honest", [&] { return brute_force_opt(inst, cfg.cap_brute); });
  auto sweep = stage("honest", [&] { return honest_sweep(inst, expanded, params, cfg.cap_brute); });
  d["opt"] = {{"value", to_string(opt.value)}, {"oracle", "brute_force"}, {"witness", opt.witness}};
  d["honest"] = {{"max_accept", sweep.max_accept}, {"argmax", sweep.argmax}, {"evaluated", sweep.evaluated},
                 {"best", to_json(sweep.best)}};

  auto dps = stage("dps", [&] {
    DpsOptions o;
    o.cap = cfg.cap_dim;
    o.tolerance = cfg.tolerance;
    return dps_certificate(pushed, cfg.copies, cfg.level, o);
  });
  d["dps"] = to_json(dps);
  d["tolerances"] = {{"psd", cfg.tolerance}, {"accept", cfg.accept_tolerance}};

  rep.pseudo_value = acc_poly.total;
  rep.true_value = sweep.max_accept;

  using detail::fmt_check;
  using detail::fmt_double;
  std::string fail;
  if (!source_check.valid())
    fail = source_check.first_violation.empty()
               ? fmt_check("source pe min eigenvalue", fmt_double(source_check.min_eig()), "1e-9 * dim")
               : "source pe: " + source_check.first_violation;
  else if (objective != 1)
    fail = fmt_check("source pe objective", to_string(objective), "exact 1");
  else if (pushed_check && !pushed_check->valid())
    fail = pushed_check->first_violation.empty()
               ? fmt_check("pushed pe min eigenvalue", fmt_double(pushed_check->min_eig()), "1e-9 * dim")
               : "pushed pe: " + pushed_check->first_violation;
  else if (acc_poly.total < 1 - cfg.accept_tolerance)
    fail = fmt_check("pseudo accept probability", fmt_double(acc_poly.total), fmt_double(cfg.accept_tolerance));
  else if (path_gap > cfg.tolerance)
    fail = fmt_check("evaluation path difference", fmt_double(path_gap), fmt_double(cfg.tolerance));
  else if (!dps.passed())
    fail = "dps " + dps.first_failure() + " (tolerance " + fmt_double(cfg.tolerance) + ")";

  if (!fail.empty()) {
    rep.verdict = Verdict::Fail;
    rep.first_failure = fail;
  } else if (opt.value == 1) {
    rep.verdict = Verdict::NotAGap;
  } else if (!(sweep.max_accept < 1 && rep.margin() > 0)) {
    rep.verdict = Verdict::Fail;
    rep.first_failure = fmt_check("gap margin", fmt_double(rep.margin()), "> 0");
  } else {
    rep.verdict = Verdict::Pass;
  }
  stage.finish();
  return rep;
}

// gen/reload -> Grigoriev pe -> oracularize -> ncSoS lift -> game value under the lift,
// exact classical value and the entangled upper bound formula.
inline GapReport run_game_gap(const RunConfig& cfg) {
  cfg.validate();
  GapReport rep;
  rep.kind = "game-gap";
  rep.oracle = "classical_value";
  detail::StageRunner stage(rep);
  auto& d = rep.details;

  auto inst = stage("instance", [&] { return load_or_generate(cfg); });
  d["instance"] = instance_summary(inst);
  auto pe = stage("pe", [&] { return obtain_pe(cfg, inst, 4); });
  d["pe"] = {{"degree", pe.degree()}, {"digest", digest(to_json(pe))}};

  auto game = stage("game", [&] { return oracularize(inst, cfg.alpha, cfg.beta); });
  d["game"] = {{"q1", game.q1_set.size()}, {"q2", game.q2_set.size()}, {"rounds", game.rounds.size()},
               {"alpha", to_string(cfg.alpha)}, {"beta", to_string(cfg.beta)}, {"digest", digest(to_json(game))}};

  auto nc = ncsos_lift(pe);
  const int nc_level = pe.degree() / 2;
  auto nc_check = stage("lift", [&] { return nc_moment_check(nc, nc_level); });
  d["nc_moment"] = {{"level", nc_check.level},
                    {"dim", nc_check.dim},
                    {"min_eig", nc_check.min_eig},
                    {"tolerance", nc_check.tolerance},
                    {"commutation_residual", to_string(nc_check.commutation_residual)},
                    {"reversal_residual", to_string(nc_check.reversal_residual)},
                    {"normalization_residual", to_string(nc_check.normalization_residual)},
                    {"valid", nc_check.valid()}};
  Rational nc_value = stage("value", [&] { return game_value_under_ncpe(game, nc); });

  auto opt = stage("opt", [&] { return brute_force_opt(inst, cfg.cap_brute); });
  auto classical = stage("classical", [&] { return classical_value(game, cfg.cap_strategies); });
  Rational honest = cfg.alpha * opt.value + cfg.beta;
  Rational bound = entangled_upper_bound(opt.value, inst.m(), cfg.gamma);
  d["values"] = {{"ncpe", to_string(nc_value)},
                 {"classical", to_string(classical.value)},
                 {"classical_strategies", classical.strategies_enumerated},
                 {"opt", to_string(opt.value)},
                 {"honest", to_string(honest)},
                 {"entangled_upper_bound", to_string(bound)},
                 {"gamma", to_string(cfg.gamma)}};

  // Lower end: honest play; upper end 1 - (1 - OPT)/3 holds for the unweighted oracularization.
  std::optional<bool> ikm;
  if (cfg.beta == 0) {
    Rational hi = 1 - (1 - opt.value) / 3;
    ikm = classical.value >= opt.value && classical.value <= hi;
    d["ikm_interval"] = {{"low", to_string(opt.value)}, {"high", to_string(hi)}, {"holds", *ikm}};
  } else {
    d["ikm_interval"] = nullptr;
  }

  rep.pseudo_value = to_double(nc_value);
  rep.true_value = to_double(classical.value);

  using detail::fmt_check;
  std::string fail;
  if (nc_value != 1)
    fail = fmt_check("game value under lift", to_string(nc_value), "exact 1");
  else if (!nc_check.valid())
    fail = fmt_check("nc moment min eigenvalue", detail::fmt_double(nc_check.min_eig),
                     detail::fmt_double(nc_check.tolerance));
  else if (classical.value < honest)
    fail = fmt_check("classical value below honest value", to_string(classical.value), "exact");
  else if (ikm && !*ikm)
    fail = fmt_check("classical value outside [OPT, 1 - (1 - OPT)/3]", to_string(classical.value), "exact");

  if (!fail.empty()) {
    rep.verdict = Verdict::Fail;
    rep.first_failure = fail;
  } else if (opt.value == 1) {
    rep.verdict = Verdict::NotAGap;
  } else if (classical.value >= 1) {
    rep.verdict = Verdict::Fail;
    rep.first_failure = fmt_check("classical value", to_string(classical.value), "< 1");
  } else {
    rep.verdict = Verdict::Pass;
  }
  stage.finish();
  return rep;
}

// Random A (n x m, bridge rescaled), h_Sep lower bound by seesaw on the bridge matrix and
// the grid oracle for ||A||_{2->4}^4.
inline GapReport run_norm24(const RunConfig& cfg, std::optional<Eigen::MatrixXd> given = std::nullopt) {
  cfg.validate();
  GapReport rep;
  rep.kind = "norm24";
  rep.oracle = "grid";
  detail::StageRunner stage(rep);
  auto& d = rep.details;

  Eigen::MatrixXd a = given ? *given : stage("matrix", [&] {
    if (cfg.n < 1 || cfg.m < 1) throw ConfigError("matrix shape must be positive");
    Rng rng(cfg.seed);
    return random_bridge_matrix(cfg.n, cfg.m, rng);
  });
  const int cols = static_cast<int>(a.cols());
  if (static_cast<std::size_t>(cols) * cols > cfg.cap_dim) throw ResourceLimit("[bridge] dimension exceeds cap");
  auto mm = stage("bridge", [&] { return two_to_four_bridge(a); });
  auto ss = stage("seesaw", [&] { return hsep_seesaw(mm.cast<cplx>(), cols, cols, 20, 500, cfg.seed); });
  double grid = stage("grid", [&] { return norm24_grid(a); });
  const double grid4 = std::pow(grid, 4);

  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    std::vector<double> row(a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c) row[c] = a(r, c);
    rows.push_back(row);
  }
  d["matrix"] = rows;
  d["seesaw"] = {{"value", ss.value}, {"monotone", ss.monotone}, {"iterations", ss.history.size() / 2}};
  d["grid_norm"] = grid;
  d["grid_norm4"] = grid4;
  d["abs_difference"] = std::abs(ss.value - grid4);
  d["tolerance"] = cfg.norm_tolerance;

  rep.pseudo_value = grid4;
  rep.true_value = ss.value;
  if (std::abs(ss.value - grid4) <= cfg.norm_tolerance) {
    rep.verdict = Verdict::Pass;
  } else {
    rep.verdict = Verdict::Fail;
    rep.first_failure = detail::fmt_check("seesaw vs grid oracle", detail::fmt_double(std::abs(ss.value - grid4)),
                                          detail::fmt_double(cfg.norm_tolerance));
  }
  stage.finish();
  return rep;
}

}  // namespace sosgap
