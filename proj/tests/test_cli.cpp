#include "synint/io.hpp"

#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace synint;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("synint_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SYNINT_CLI_PATH) + " " + args + " > " + (log / "stdout.txt").string() + " 2> " +
                          (log / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate then evaluate recovers a noiseless instance") {
  const auto dir = scratch("roundtrip");
  REQUIRE(run_cli("simulate --contexts 6 --actions 8 --p 10 --r 2 --density 0.8 --seed 4 --output " + dir.string(),
                  dir) == 0);
  CHECK(fs::exists(dir / "ground_truth.json"));
  CHECK(fs::exists(dir / "observed.csv"));
  REQUIRE(run_cli("evaluate --estimator si_a --input " + (dir / "observed.csv").string() + " --output " +
                      dir.string(),
                  dir) == 0);
  const auto loo = io::Json::parse(io::read_text(dir / "loo.json"));
  CHECK(loo.at("summary").at("median_r2").get<double>() >= 1.0 - 1e-8);
  CHECK(fs::exists(dir / "summary.csv"));
  fs::remove_all(dir);
}

TEST_CASE("impute skips pairs without donors and still succeeds") {
  const auto dir = scratch("skip");
  io::write_text(dir / "in.csv", "context,action,f1\nc0,a0,1\nc1,a1,2\n");
  REQUIRE(run_cli("impute --estimator si_a --input " + (dir / "in.csv").string() + " --output " + dir.string(), dir) ==
          0);
  const auto doc = io::Json::parse(io::read_text(dir / "reports.json"));
  CHECK(doc.at("skipped").size() == 2);
  CHECK_FALSE(doc.at("skipped").at(0).at("reason").get<std::string>().empty());
  CHECK(io::read_text(dir / "predictions.csv") == "context,action,f1\n");
  fs::remove_all(dir);
}

TEST_CASE("impute writes predictions for missing pairs") {
  const auto dir = scratch("impute");
  REQUIRE(run_cli("simulate --contexts 5 --actions 6 --p 4 --r 2 --seed 2 --output " + dir.string(), dir) == 0);
  REQUIRE(run_cli("impute --input " + (dir / "ground_truth.json").string() + " --output " + dir.string(), dir) == 0);
  const auto predictions = io::ingest(dir / "predictions.csv");
  const auto truth = io::Json::parse(io::read_text(dir / "ground_truth.json"));
  CHECK(predictions.size() > 0);
  REQUIRE(run_cli("impute --tandem-rounds 3 --input " + (dir / "observed.csv").string() + " --output " + dir.string(),
                  dir) == 0);
  CHECK(io::Json::parse(io::read_text(dir / "reports.json")).contains("tandem"));
  fs::remove_all(dir);
}

TEST_CASE("diagnose writes spectrum and per-pair tests") {
  const auto dir = scratch("diagnose");
  REQUIRE(run_cli("simulate --contexts 4 --actions 5 --p 4 --r 2 --seed 3 --output " + dir.string(), dir) == 0);
  REQUIRE(run_cli("diagnose --donor-strategy greedy --input " + (dir / "observed.csv").string() + " --output " +
                      dir.string(),
                  dir) == 0);
  const auto tests = io::Json::parse(io::read_text(dir / "subspace_tests.json"));
  CHECK(tests.size() == 20);
  CHECK(io::Json::parse(io::read_text(dir / "spectrum.json")).contains("singular_values"));
  fs::remove_all(dir);
}

TEST_CASE("usage and runtime errors") {
  const auto dir = scratch("errors");
  io::write_text(dir / "in.csv", "context,action,f1\nc0,a0,1\n");
  CHECK(run_cli("evaluate --estimator unknown --input " + (dir / "in.csv").string(), dir) == 2);
  const auto err = io::Json::parse(io::read_text(dir / "stderr.txt"));
  CHECK(err.at("error").contains("message"));
  CHECK(run_cli("evaluate --rho 1.5 --input " + (dir / "in.csv").string(), dir) == 2);
  CHECK(run_cli("frobnicate", dir) == 2);

  io::write_text(dir / "bad.csv", "context,action,f1,f2\nc0,a0,1\n");
  CHECK(run_cli("evaluate --input " + (dir / "bad.csv").string() + " --output " + dir.string(), dir) == 1);
  const auto parse_err = io::Json::parse(io::read_text(dir / "stderr.txt"));
  CHECK(parse_err.at("error").at("kind") == "parse");
  CHECK(parse_err.at("error").at("message").get<std::string>().find("line 2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("evaluate is deterministic") {
  const auto dir = scratch("determinism");
  REQUIRE(run_cli("simulate --contexts 6 --actions 7 --p 5 --r 2 --noise-sigma 0.1 --seed 9 --output " + dir.string(),
                  dir) == 0);
  const std::string args = "evaluate --estimator si_a_fallback --sweep-donors 1,2 --sweep-training 1,2 --seed 5 --input " +
                           (dir / "observed.csv").string() + " --output ";
  REQUIRE(run_cli(args + (dir / "one").string(), dir) == 0);
  REQUIRE(run_cli(args + (dir / "two").string(), dir) == 0);
  for (const auto* name : {"loo.json", "summary.csv", "sweep.json"})
    CHECK(io::read_text(dir / "one" / name) == io::read_text(dir / "two" / name));
  fs::remove_all(dir);
}
