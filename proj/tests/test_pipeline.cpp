#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sosgap/pipeline.hpp"

using namespace sosgap;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;

namespace {

RunConfig planted_config() {
  RunConfig cfg;
  cfg.mode = GenMode::Planted;
  cfg.n = 6;
  cfg.m = 4;
  cfg.seed = 2;
  cfg.degree = 4;
  return cfg;
}

std::string write_temp(const std::string& name, const nlohmann::json& j) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << j.dump();
  return path.string();
}

nlohmann::json without_timestamp(const GapReport& r) {
  auto j = r.to_json();
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("run configurations are validated", "[pipeline]") {
  RunConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.level = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.weights[0] = Rational(1, 2);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.alpha = Rational(1, 2);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.gamma = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.reps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("satisfiable instances run cleanly but are not gaps", "[pipeline]") {
  auto r = run_gap(planted_config());
  CHECK(r.verdict == Verdict::NotAGap);
  CHECK(r.exit_code() == 1);
  CHECK(r.first_failure.empty());
  CHECK_THAT(r.pseudo_value, WithinAbs(1.0, 1e-8));
  CHECK_THAT(r.true_value, WithinAbs(1.0, 1e-12));
  CHECK(r.details.at("opt").at("value") == "1");
  CHECK(r.details.at("pushed_validity").at("max_constraint_residual") == "0");
  CHECK(r.details.at("dps").at("passed") == true);
  CHECK(r.details.at("accept").at("path_difference").get<double>() <= 1e-9);
  CHECK(r.timestamp.contains("stages"));
}

TEST_CASE("reports are deterministic apart from the timestamp", "[pipeline]") {
  auto a = run_gap(planted_config()), b = run_gap(planted_config());
  CHECK(without_timestamp(a) == without_timestamp(b));
  auto j = a.to_json();
  for (const char* key : {"kind", "verdict", "pseudo_value", "true_value", "oracle", "margin", "first_failure", "details"})
    CHECK(j.contains(key));
}

TEST_CASE("the Petersen instance is a gap", "[pipeline][slow]") {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.check_pushed = false;
  auto r = run_gap(cfg);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.exit_code() == 0);
  CHECK(r.details.at("pe").at("degree") == 4);
  CHECK(r.details.at("opt").at("value") == "9/10");
  CHECK(r.margin() > 0);
  CHECK(r.true_value < 1);
  CHECK(r.pseudo_value >= 1 - 1e-8);
}

TEST_CASE("an invalid supplied pe fails at the first violated check", "[pipeline]") {
  auto cfg = planted_config();
  auto inst = gen_3xor(cfg.n, cfg.m, cfg.mode, cfg.seed);
  auto pe = grigoriev_pe(inst, 4);
  pe.set(Monomial{0, 1}, 2);
  cfg.pe_path = write_temp("sosgap_bad_pe.json", to_json(pe));
  auto r = run_gap(cfg);
  CHECK(r.verdict == Verdict::Fail);
  CHECK_THAT(r.first_failure, StartsWith("source pe"));

  auto wrong_n = grigoriev_pe(gen_3xor(7, 3, GenMode::Planted, 1), 4);
  cfg.pe_path = write_temp("sosgap_wrong_pe.json", to_json(wrong_n));
  try {
    run_gap(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "pe");
    CHECK_THAT(std::string(e.what()), StartsWith("[pe] "));
  }
}

TEST_CASE("stage errors carry the stage name; resource limits keep their type", "[pipeline]") {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.degree = 6;
  try {
    run_gap(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "pe");
    CHECK_THAT(std::string(e.what()), ContainsSubstring("0 = 1"));
  }
  auto small = planted_config();
  small.cap_brute = 3;
  CHECK_THROWS_AS(run_gap(small), ResourceLimit);
  small = planted_config();
  small.instance_path = "/nonexistent/instance.json";
  CHECK_THROWS_AS(run_gap(small), StageError);
}

TEST_CASE("game gap on a linear instance", "[pipeline]") {
  RunConfig cfg;
  cfg.mode = GenMode::Linear;
  cfg.n = 10;
  cfg.m = 11;
  cfg.seed = 3;
  auto r = run_game_gap(cfg);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.pseudo_value == 1.0);
  CHECK(r.details.at("values").at("classical") == "32/33");
  CHECK(r.details.at("values").at("opt") == "10/11");
  CHECK(r.details.at("values").at("entangled_upper_bound") == "14640/14641");
  CHECK(r.details.at("ikm_interval").at("holds") == true);
  CHECK(r.details.at("nc_moment").at("valid") == true);

  // Consistency rounds make every player-1 answer live, so nothing is pruned.
  cfg.alpha = Rational(1, 2);
  cfg.beta = Rational(1, 2);
  CHECK_THROWS_AS(run_game_gap(cfg), ResourceLimit);

  cfg = RunConfig{};
  cfg.mode = GenMode::Planted;
  cfg.n = 6;
  cfg.m = 3;
  auto sat = run_game_gap(cfg);
  CHECK(sat.verdict == Verdict::NotAGap);
  CHECK(sat.true_value == 1.0);
  cfg.alpha = Rational(1, 2);
  cfg.beta = Rational(1, 2);
  auto mixed = run_game_gap(cfg);
  CHECK(mixed.details.at("ikm_interval").is_null());
  CHECK(mixed.verdict == Verdict::NotAGap);
}

TEST_CASE("norm24 on reference and random matrices", "[pipeline]") {
  RunConfig cfg;
  auto id = run_norm24(cfg, Eigen::MatrixXd::Identity(3, 3));
  CHECK(id.verdict == Verdict::Pass);
  CHECK_THAT(id.pseudo_value, WithinAbs(1.0, 1e-9));
  CHECK_THAT(id.true_value, WithinAbs(1.0, 1e-9));

  Eigen::MatrixXd row(1, 3);
  row << 0.6, 0, 0.8;
  auto r1 = run_norm24(cfg, row);
  CHECK(r1.verdict == Verdict::Pass);
  CHECK_THAT(r1.true_value, WithinAbs(1.0, 1e-9));

  for (std::uint64_t s = 1; s <= 3; ++s) {
    cfg.seed = s;
    cfg.n = 4;
    cfg.m = 3;
    auto r = run_norm24(cfg);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.details.at("abs_difference").get<double>() <= 1e-4);
    CHECK(r.details.at("seesaw").at("monotone") == true);
  }
  cfg.cap_dim = 4;
  CHECK_THROWS_AS(run_norm24(cfg), ResourceLimit);
}
