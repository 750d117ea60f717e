#include "doctest.h"

#include "json.hpp"
#include "kyfan/commands.hpp"
#include "kyfan/problem_io.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

using namespace kyfan;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(KYFAN_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(KYFAN_TEST_DATA) + "/" + name; }

}  // namespace

TEST_CASE("analyze exit codes follow the verdict") {
  const auto stable = run_cli("analyze " + data("identity.json"));
  CHECK(stable.code == 0);
  CHECK(json::parse(stable.out)["verdict"]["status"] == "Stable");

  const auto unstable = run_cli("analyze " + data("degenerate.json"));
  CHECK(unstable.code == 1);
  const json u = json::parse(unstable.out);
  CHECK(u["verdict"]["status"] == "Unstable");
  const json w = u["verdict"]["witness"]["W"];
  REQUIRE(w["data"].size() == 6);
  CHECK(std::abs(std::abs(w["data"][0].get<double>()) - 1) < 1e-12);
  CHECK(u["verdict"]["witness"]["kernel_residual"].get<double>() <= 1e-8);

  const auto affine = run_cli("analyze " + data("affine_zero.json"));
  CHECK(affine.code == 0);
  const json a = json::parse(affine.out);
  CHECK(a["certificate"]["cone_case"] == "ZeroGroupStrict");
  CHECK(a["upsilon"]["hull_dim"] == 0);
}

TEST_CASE("input errors exit with 3 and a JSON error") {
  const auto bad = run_cli("analyze " + data("malformed_dims.json"));
  CHECK(bad.code == 3);
  const json e = json::parse(bad.out);
  CHECK(e["error"]["kind"] == "SchemaError");
  CHECK(e["error"]["pointer"] == "/X");

  const auto nonstat = run_cli("tilt " + data("nonstationary.json"));
  CHECK(nonstat.code == 3);
  CHECK(json::parse(nonstat.out).contains("error"));

  CHECK(run_cli("analyze " + data("does_not_exist.json")).code == 3);
  CHECK(run_cli("analyze " + data("identity.json") + " --tol.cone -1").code == 3);
}

TEST_CASE("tilt and subgrad-check") {
  const auto t = run_cli("tilt " + data("degenerate.json"));
  CHECK(t.code == 1);
  CHECK(json::parse(t.out)["verdict"]["status"] == "Unstable");

  const auto member = run_cli("subgrad-check " + data("kink.json"));
  CHECK(member.code == 0);
  CHECK(json::parse(member.out)["member"] == true);

  // G = 0.5 * Gamma is not in the subdifferential at diag(1, 1).
  const std::string tmp = "kyfan_test_half_gamma.json";
  std::ofstream(tmp) << R"({"Gamma": {"rows": 2, "cols": 3, "data": [0.5, 0, 0, 0, 0, 0]}})";
  const auto non = run_cli("subgrad-check " + data("kink.json") + " --gamma " + tmp);
  CHECK(non.code == 1);
  CHECK(json::parse(non.out)["member"] == false);
  std::remove(tmp.c_str());
}

TEST_CASE("d2 values") {
  const json zero = json::parse(run_cli("d2 " + data("kink.json") + " " + data("zero_direction.json")).out);
  CHECK(zero["value"].get<double>() == 0.0);
  CHECK_FALSE(zero.contains("reason"));

  const json out = json::parse(run_cli("d2 " + data("kink.json") + " " + data("outside_cone.json")).out);
  CHECK(out["value"] == "+inf");
  CHECK(out["reason"] == "OutsideCriticalCone");

  const json reg = json::parse(std::ifstream(data("d2_regression.json")));
  const auto r = run_cli("d2 " + data("identity.json") + " " + data("d2_regression.json") + " --cross-check");
  CHECK(r.code == 0);
  const json v = json::parse(r.out);
  const double expected = reg["expected"].get<double>();
  CHECK(std::abs(v["value"].get<double>() - expected) <= 1e-9 * expected);
  CHECK(v["cross_check"]["general_agrees"] == true);
}

TEST_CASE("reports are reproducible") {
  const auto a = run_cli("analyze " + data("degenerate.json") + " --seed 11 --rotation-samples 3 --probe");
  const auto b = run_cli("analyze " + data("degenerate.json") + " --seed 11 --rotation-samples 3 --probe");
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out)["oracle"]["probe"]["consistent_with"] == "Unstable");

  const auto problem = io::load_problem(data("identity.json"));
  cli::AnalyzeFlags flags;
  flags.d2_samples = 4;
  CHECK(cli::run_analyze(problem, flags).output.dump(2) == cli::run_analyze(problem, flags).output.dump(2));
}

TEST_CASE("oracle-validate") {
  const auto a = run_cli("oracle-validate --suite prox --count 5 --seed 3");
  const auto b = run_cli("oracle-validate --suite prox --count 5 --seed 3");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("prox") != std::string::npos);
  CHECK(a.out.find("quotient") == std::string::npos);
  CHECK(run_cli("oracle-validate --suite nonsense").code == 3);

  cli::ValidateOptions opt;
  opt.suite = "formula";
  opt.count = 10;
  const auto res = cli::run_oracle_validate(opt);
  CHECK(res.exit_code == 0);
  CHECK(res.output.dump() == cli::run_oracle_validate(opt).output.dump());
}
