#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "sosgap_cli_test";
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  auto dir = scratch();
  auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  std::string cmd = std::string(SOSGAP_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

nlohmann::json without_timestamp(nlohmann::json j) {
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("gen output matches the golden file byte for byte", "[cli]") {
  auto r = run("gen --n 10 --m 60 --seed 1");
  CHECK(r.code == 0);
  CHECK(r.out == slurp(fs::path(SOSGAP_GOLDEN_DIR) / "gen_n10_m60_seed1.json"));
  auto file = scratch() / "g.json";
  CHECK(run("gen --n 10 --m 60 --seed 1 --out " + file.string()).code == 0);
  CHECK(slurp(file) == r.out);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
  CHECK(run("").code == 2);
  CHECK(run("gen --n 2").code == 2);
  CHECK(run("gen --no-such-flag").code == 2);
  CHECK(run("gen --mode spiral").code == 2);
  auto w = run("gap --weights 1,2,3,4");
  CHECK(w.code == 2);
  CHECK_THAT(w.err, ContainsSubstring("sum to 1"));
  CHECK(run("gap --copies 2 --level 1").code == 2);
  CHECK(run("game-gap --alpha 1/2").code == 2);
  CHECK(run("verify").code == 2);
}

TEST_CASE("resource limits exit with 3", "[cli]") {
  auto r = run("norm24 --cap-dim 4");
  CHECK(r.code == 3);
  CHECK_THAT(r.err, ContainsSubstring("resource limit"));
}

TEST_CASE("a corrupted pe file yields a stage-tagged error", "[cli]") {
  auto bad = scratch() / "bad_pe.json";
  std::ofstream(bad) << R"({"nvars": 6, "degree": 4, "table": [[[1, 0], 1]]})";
  auto r = run("gap --mode planted --n 6 --m 4 --seed 2 --pe " + bad.string());
  CHECK(r.code == 1);
  CHECK_THAT(r.err, StartsWith("error: [pe] "));
  std::ofstream(bad) << "{ not json";
  CHECK_THAT(run("gap --mode planted --n 6 --m 4 --seed 2 --pe " + bad.string()).err, StartsWith("error: [pe] "));
}

TEST_CASE("gap reports are deterministic apart from the timestamp", "[cli]") {
  auto a = scratch() / "a.json", b = scratch() / "b.json";
  const std::string args = "gap --mode planted --n 6 --m 4 --seed 2 --degree 4 --out ";
  auto ra = run(args + a.string()), rb = run(args + b.string());
  // A satisfiable instance is not a gap.
  CHECK(ra.code == 1);
  CHECK(rb.code == 1);
  auto ja = nlohmann::json::parse(slurp(a)), jb = nlohmann::json::parse(slurp(b));
  CHECK(ja.at("verdict") == "NOT-A-GAP");
  CHECK(without_timestamp(ja) == without_timestamp(jb));
  CHECK_THAT(ra.err, StartsWith("gap: NOT-A-GAP"));
}

TEST_CASE("gen, pe and verify compose through files", "[cli]") {
  auto g = scratch() / "inst.json", p = scratch() / "pe.json";
  CHECK(run("gen --mode planted --n 8 --m 6 --seed 1 --out " + g.string()).code == 0);
  CHECK(run("pe --instance " + g.string() + " --degree 4 --out " + p.string()).code == 0);
  auto v = run("verify --pe " + p.string() + " --instance " + g.string());
  CHECK(v.code == 0);
  auto j = nlohmann::json::parse(v.out);
  CHECK(j.at("verdict") == "PASS");
  CHECK(j.at("objective") == "1");
  CHECK(run("reduce --instance " + g.string()).code == 0);
  // Unsatisfiable at width 3: no pe exists.
  CHECK(run("pe --n 10 --m 60 --seed 1 --degree 3").code == 1);
}

TEST_CASE("game-gap and norm24 pass on their defaults", "[cli]") {
  auto gg = run("game-gap --seed 3");
  CHECK(gg.code == 0);
  auto j = nlohmann::json::parse(gg.out);
  CHECK(j.at("details").at("values").at("classical") == "32/33");
  auto nm = run("norm24 --seed 2");
  CHECK(nm.code == 0);
  CHECK(nlohmann::json::parse(nm.out).at("verdict") == "PASS");
}
