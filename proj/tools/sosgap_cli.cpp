// sosgap: generate 3XOR instances, build the reductions and certify integrality gaps.
//
// Exit codes: 0 PASS, 1 FAIL (gap not certified or a stage error), 2 usage, 3 resource limit.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sosgap/pipeline.hpp"

namespace {

using namespace sosgap;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;

struct CliState {
  RunConfig cfg;
  std::string mode = "random";
  int degree = -1;
  std::string weights;
  std::string gamma = "1";
  std::string alpha = "1";
  std::string beta = "0";
  std::string out;
  std::string instance;
  std::string pe;
  std::string csp;
};

std::array<Rational, 4> parse_weights(const std::string& s) {
  std::array<Rational, 4> w;
  std::stringstream ss(s);
  std::string item;
  int k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == 4) throw ConfigError("--weights takes exactly 4 values");
    w[k++] = parse_rational(item);
  }
  if (k != 4) throw ConfigError("--weights takes exactly 4 values");
  return w;
}

void finalize(CliState& st) {
  st.cfg.mode = parse_gen_mode(st.mode);
  if (st.degree >= 0) st.cfg.degree = st.degree;
  if (!st.weights.empty()) st.cfg.weights = parse_weights(st.weights);
  st.cfg.gamma = parse_rational(st.gamma);
  st.cfg.alpha = parse_rational(st.alpha);
  st.cfg.beta = parse_rational(st.beta);
  if (!st.instance.empty()) st.cfg.instance_path = st.instance;
  if (!st.pe.empty()) st.cfg.pe_path = st.pe;
  st.cfg.validate();
}

void emit(const CliState& st, const nlohmann::json& j) {
  if (st.out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream os(st.out);
  if (!os) throw ConfigError("cannot write " + st.out);
  os << j.dump(2) << "\n";
}

int emit_report(const CliState& st, const GapReport& rep) {
  emit(st, rep.to_json());
  std::cerr << rep.kind << ": " << to_string(rep.verdict) << "  pseudo " << rep.pseudo_value << "  true "
            << rep.true_value << " (" << rep.oracle << ")  margin " << rep.margin() << "\n";
  if (!rep.first_failure.empty()) std::cerr << "  first failure: " << rep.first_failure << "\n";
  return rep.exit_code();
}

void add_instance_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--seed", st.cfg.seed, "RNG seed")->capture_default_str();
  sub->add_option("--n", st.cfg.n, "number of variables")->check(CLI::Range(3, 1 << 20))->capture_default_str();
  sub->add_option("--m", st.cfg.m, "number of clauses")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--mode", st.mode, "random | planted | linear | petersen")->capture_default_str();
  sub->add_option("--instance", st.instance, "load the instance from a JSON file instead of generating");
  sub->add_option("--cap-brute", st.cfg.cap_brute, "largest n for exhaustive search")->capture_default_str();
  sub->add_option("--out", st.out, "output file (default: stdout)");
}

void add_pe_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--degree", st.degree, "pseudo-expectation degree (default: largest consistent)");
  sub->add_option("--pe", st.pe, "load the pseudo-expectation from a JSON file");
}

void add_protocol_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--copies", st.cfg.copies, "copies per side c")->capture_default_str();
  sub->add_option("--level", st.cfg.level, "DPS level k")->capture_default_str();
  sub->add_option("--weights", st.weights, "four test weights, comma separated (e.g. 1/4,1/4,1/4,1/4)");
  sub->add_option("--reps", st.cfg.reps, "parallel repetitions")->capture_default_str();
  sub->add_option("--cap-dim", st.cfg.cap_dim, "Hilbert dimension cap")->capture_default_str();
}

int cmd_gen(const CliState& st) {
  auto inst = gen_3xor(st.cfg.n, st.cfg.m, st.cfg.mode, st.cfg.seed);
  emit(st, to_json(inst));
  std::cerr << "gen: n=" << inst.n << " m=" << inst.m() << " mode=" << to_string(st.cfg.mode) << "\n";
  return kExitPass;
}

int cmd_reduce(const CliState& st) {
  auto inst = load_or_generate(st.cfg);
  auto [gadget, emb] = xor_to_2oo4(inst);
  auto expanded = expanderize(gadget, st.cfg.seed);
  nlohmann::json j{{"instance", to_json(inst)}, {"gadget", to_json(gadget)}, {"expanded", to_json(expanded)},
                   {"kappa", emb.kappa()}};
  try {
    j["soundness"] = to_json(soundness_probe(inst, gadget, expanded, st.cfg.cap_brute));
  } catch (const ResourceLimit& e) {
    j["soundness"] = {{"skipped", e.what()}};
  }
  emit(st, j);
  std::cerr << "reduce: gadget " << gadget.nvars << " vars / " << gadget.m() << " clauses, expanded "
            << expanded.nvars << " / " << expanded.m() << "\n";
  return kExitPass;
}

int cmd_pe(const CliState& st) {
  auto inst = load_or_generate(st.cfg);
  auto pe = obtain_pe(st.cfg, inst, std::min(inst.n, 8));
  auto rep = check_pe(pe, xor_constraints(inst));
  emit(st, to_json(pe));
  std::cerr << "pe: degree " << pe.degree() << ", objective " << to_string(pe_eval(pe, xor_objective(inst)))
            << ", " << (rep.valid() ? "valid" : "INVALID " + rep.first_violation) << "\n";
  return rep.valid() ? kExitPass : kExitFail;
}

int cmd_protocol(const CliState& st) {
  const auto& cfg = st.cfg;
  auto inst = load_or_generate(cfg);
  auto pe = obtain_pe(cfg, inst, 4 * cfg.copies);
  auto [gadget, emb] = xor_to_2oo4(inst);
  auto expanded = expanderize(gadget, cfg.seed);
  auto pushed = pushforward(pe, lift_embedding(expanded, emb).components);
  auto params = make_params(expanded, cfg.copies, cfg.weights, cfg.reps);
  params.cap = cfg.cap_dim;
  auto poly = accept_probability(expanded, &pushed, params, EvalPath::Polynomial);
  auto mat = accept_probability(expanded, &pushed, params, EvalPath::Matrix);
  auto sweep = honest_sweep(inst, expanded, params, cfg.cap_brute);
  const bool ok = poly.total >= 1 - cfg.accept_tolerance && std::abs(poly.total - mat.total) <= cfg.tolerance;
  emit(st, {{"polynomial", to_json(poly)},
            {"matrix", to_json(mat)},
            {"path_difference", std::abs(poly.total - mat.total)},
            {"honest", {{"max_accept", sweep.max_accept}, {"argmax", sweep.argmax}, {"best", to_json(sweep.best)}}},
            {"margin", poly.total - sweep.max_accept},
            {"tolerances", {{"accept", cfg.accept_tolerance}, {"paths", cfg.tolerance}}},
            {"seed", cfg.seed}});
  std::cerr << "protocol: pseudo accept " << poly.total << " (matrix " << mat.total << "), honest max "
            << sweep.max_accept << "\n";
  return ok ? kExitPass : kExitFail;
}

int cmd_verify(const CliState& st) {
  if (st.pe.empty()) throw ConfigError("verify needs --pe");
  auto pe = pe_from_json(read_json_file(st.pe));
  std::vector<MultilinearPoly> cons;
  nlohmann::json j;
  if (!st.csp.empty()) {
    auto csp = csp_from_json(read_json_file(st.csp));
    if (csp.nvars != pe.nvars()) throw InvalidInstance("pe variable count does not match the CSP");
    cons = csp_constraints(csp);
    auto sums = literal_sum_constraints(csp);
    cons.insert(cons.end(), sums.begin(), sums.end());
    j["target"] = "csp";
  } else {
    auto inst = load_or_generate(st.cfg);
    if (inst.n != pe.nvars()) throw InvalidInstance("pe variable count does not match the instance");
    cons = xor_constraints(inst);
    j["target"] = "3xor";
    j["objective"] = to_string(pe_eval(pe, xor_objective(inst)));
  }
  auto rep = check_pe(pe, cons);
  j["degree"] = pe.degree();
  j["validity"] = to_json(rep);
  j["verdict"] = rep.valid() ? "PASS" : "FAIL";
  emit(st, j);
  std::cerr << "verify: " << (rep.valid() ? "PASS" : "FAIL " + rep.first_violation) << "\n";
  return rep.valid() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrality gaps for the DPS and ncSoS hierarchies"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file");
  CliState st;

  auto* gen = app.add_subcommand("gen", "generate a 3XOR instance");
  add_instance_flags(gen, st);

  auto* reduce = app.add_subcommand("reduce", "3XOR -> 2-out-of-4-SAT-EQ gadget and expander copy graph");
  add_instance_flags(reduce, st);

  auto* pe = app.add_subcommand("pe", "Grigoriev pseudo-expectation of a 3XOR instance");
  add_instance_flags(pe, st);
  add_pe_flags(pe, st);

  auto* gap = app.add_subcommand("gap", "full DPS integrality-gap pipeline");
  add_instance_flags(gap, st);
  add_pe_flags(gap, st);
  add_protocol_flags(gap, st);

  auto* protocol = app.add_subcommand("protocol", "accept probabilities of the pushed pe and honest witnesses");
  add_instance_flags(protocol, st);
  add_pe_flags(protocol, st);
  add_protocol_flags(protocol, st);

  auto* game = app.add_subcommand("game-gap", "oracularized game: ncSoS value vs classical value");
  add_instance_flags(game, st);
  add_pe_flags(game, st);
  game->add_option("--gamma", st.gamma, "constant in the entangled upper bound")->capture_default_str();
  game->add_option("--alpha", st.alpha, "weight of simulation+consistency rounds")->capture_default_str();
  game->add_option("--beta", st.beta, "weight of consistency-only rounds")->capture_default_str();

  auto* norm = app.add_subcommand("norm24", "2->4 norm via the h_Sep bridge, seesaw vs grid oracle");
  norm->add_option("--seed", st.cfg.seed, "RNG seed")->capture_default_str();
  norm->add_option("--n", st.cfg.n, "rows of A")->check(CLI::Range(1, 64));
  norm->add_option("--m", st.cfg.m, "columns of A")->check(CLI::Range(1, 64));
  norm->add_option("--cap-dim", st.cfg.cap_dim, "Hilbert dimension cap")->capture_default_str();
  norm->add_option("--out", st.out, "output file (default: stdout)");

  auto* verify = app.add_subcommand("verify", "check a pe file against a 3XOR instance or a CSP");
  add_instance_flags(verify, st);
  verify->add_option("--pe", st.pe, "pseudo-expectation JSON")->required();
  verify->add_option("--csp", st.csp, "check against this CSP JSON instead of the 3XOR instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    // Per-subcommand defaults for flags left unset.
    struct Defaults {
      CLI::App* sub;
      const char* mode;
      int n, m;
    };
    for (const auto& d : {Defaults{gen, "random", 10, 20}, Defaults{reduce, "random", 10, 20},
                          Defaults{pe, "random", 10, 20}, Defaults{verify, "random", 10, 20},
                          Defaults{gap, "petersen", 15, 10}, Defaults{protocol, "petersen", 15, 10},
                          Defaults{game, "linear", 10, 11}, Defaults{norm, "random", 3, 3}}) {
      if (!d.sub->parsed()) continue;
      if (d.sub != norm && d.sub->count("--mode") == 0) st.mode = d.mode;
      if (d.sub->count("--n") == 0) st.cfg.n = d.n;
      if (d.sub->count("--m") == 0) st.cfg.m = d.m;
    }
    finalize(st);
  } catch (const Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(st);
    if (reduce->parsed()) return cmd_reduce(st);
    if (pe->parsed()) return cmd_pe(st);
    if (gap->parsed()) return emit_report(st, run_gap(st.cfg));
    if (protocol->parsed()) return cmd_protocol(st);
    if (game->parsed()) return emit_report(st, run_game_gap(st.cfg));
    if (norm->parsed()) return emit_report(st, run_norm24(st.cfg));
    if (verify->parsed()) return cmd_verify(st);
  } catch (const ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
