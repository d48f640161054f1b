// Exercises the installed binary end to end: exit-code contract, machine
// output stability, and the expression round trip of scalar fields.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fint/scalar_expr.hpp"

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(FINT_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.append(buf.data(), got);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string data(const std::string& name) {
  return std::string(FINT_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("exit code contract") {
  CHECK(run("analyze " + data("example_1_1.json")).exit_code == 0);
  CHECK(run("basis " + data("example_1_1.json")).exit_code == 0);
  CHECK(run("verify " + data("example_1_1.json") + " --trajectories 5")
            .exit_code == 0);

  // 2: input/schema errors.
  std::string bad = "/tmp/fint_cli_bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run("analyze " + bad).exit_code == 2);
  std::ofstream(bad) << "{\"n\": 2, \"terms\": [], \"window\": [0, 1]}";
  CHECK(run("analyze " + bad).exit_code == 2);
  CHECK(run("analyze /tmp/fint_does_not_exist.json").exit_code == 2);

  // 3: no class matches.
  std::string shapeless = "/tmp/fint_cli_shapeless.json";
  std::ofstream(shapeless) << R"json({
    "n": 2,
    "terms": [
      {"alpha": "sin(t)", "A": [[0, 1], [0, 0]]},
      {"alpha": "t",      "A": [[0, 0], [1, 0]]},
      {"alpha": "exp(t)", "A": [[1, 0], [0, -1]]}
    ],
    "window": [0, 1]
  })json";
  CHECK(run("analyze " + shapeless).exit_code == 3);

  // 4: constructor hypotheses fail (forced mode without forcing).
  CHECK(run("basis " + data("example_1_1.json") + " --mode forced")
            .exit_code == 4);

  // 5: verification gate failure via the injected corruption.
  CHECK(run("verify " + data("example_1_1.json") +
            " --trajectories 5 --inject-test")
            .exit_code == 5);
}

TEST_CASE("machine output is stable and round-trips scalar fields") {
  auto first = run("basis " + data("example_2_6.json") + " --json");
  auto second = run("basis " + data("example_2_6.json") + " --json");
  CHECK(first.exit_code == 0);
  CHECK(first.out == second.out);

  auto j = nlohmann::ordered_json::parse(first.out);
  CHECK(j.contains("class"));
  CHECK(j["class"] == "lappo_danilevskii");
  REQUIRE(j.contains("system"));
  // Every scalar-expression field parses back and evaluates identically.
  for (const auto& term : j["system"]["terms"]) {
    std::string alpha = term["alpha"].get<std::string>();
    auto parsed = fint::parse_scalar(alpha);
    auto reparsed = fint::parse_scalar(fint::format_scalar(parsed));
    for (double t : {0.1, 0.5, 1.0, 1.7})
      CHECK(fint::eval_scalar(parsed, t) ==
            doctest::Approx(fint::eval_scalar(reparsed, t)).epsilon(1e-15));
  }
  REQUIRE(j["integrals"].size() == 2);
  for (const auto& entry : j["integrals"]) {
    CHECK(entry.contains("expression"));
    CHECK(entry.contains("provenance"));
    CHECK(entry.contains("singular_set"));
  }

  // Key order is part of the contract: class precedes mode precedes system.
  auto class_pos = first.out.find("\"class\"");
  auto mode_pos = first.out.find("\"mode\"");
  auto system_pos = first.out.find("\"system\"");
  CHECK(class_pos < mode_pos);
  CHECK(mode_pos < system_pos);
}

TEST_CASE("analyze reports eigen structure") {
  auto r = run("analyze " + data("example_1_1.json") + " --json");
  CHECK(r.exit_code == 0);
  auto j = nlohmann::ordered_json::parse(r.out);
  CHECK(j["class"] == "constant");
  REQUIRE(j["spectrum"]["eigenvalues"].size() == 4);
  CHECK(j["spectrum"]["exact"] == true);
  CHECK(j["spectrum"]["eigenvalues"][0]["re"] == 0.0);
  CHECK(j["spectrum"]["eigenvalues"][3]["re"] == 2.0);

  auto r2 = run("analyze " + data("example_2_17.json"));
  CHECK(r2.exit_code == 0);
  // The quadruple divisor of the designated matrix is reported.
  CHECK(r2.out.find("(λ-1)⁴") != std::string::npos);
}

TEST_CASE("verify reports rank and drift") {
  auto r = run("verify " + data("example_2_4.json") +
               " --trajectories 5 --json");
  CHECK(r.exit_code == 0);
  auto j = nlohmann::ordered_json::parse(r.out);
  CHECK(j["passed"] == true);
  CHECK(j["independence_rank"] == 3);
  for (const auto& entry : j["integrals"])
    CHECK(entry["rel_drift"].get<double>() < 1e-6);
}

TEST_CASE("verify honors the seed flag deterministically") {
  auto a = run("verify " + data("example_1_5.json") +
               " --trajectories 5 --seed 99 --json");
  auto b = run("verify " + data("example_1_5.json") +
               " --trajectories 5 --seed 99 --json");
  CHECK(a.out == b.out);
}
