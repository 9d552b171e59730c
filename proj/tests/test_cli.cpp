#include <doctest.h>

#include <sstream>

#include "diffsub/cli.hpp"
#include "diffsub/serialize.hpp"
#include "helpers.hpp"

using namespace diffsub;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "diffsub");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("simulate, discover and evaluate chain") {
  auto dir = testing::temp_dir("cli_chain");
  auto sim = (dir / "sim").string();
  auto disc = (dir / "disc").string();
  REQUIRE(cli({"simulate", "--n", "1000", "--seed", "2", "--out", sim}).code == 0);
  REQUIRE(std::filesystem::exists(dir / "sim" / "truth.json"));
  auto d = cli({"discover", "--data", sim + "/data.csv", "--out", disc});
  REQUIRE(d.code == 0);
  CHECK(std::filesystem::exists(dir / "disc" / "trace.jsonl"));
  CHECK(std::filesystem::exists(dir / "disc" / "config_echo.json"));
  auto e = cli({"evaluate", "--report", disc + "/report.json", "--truth", sim + "/data.csv"});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("F1") != std::string::npos);
  auto metrics = read_json_file(disc + "/evaluation/metrics.json");
  CHECK(metrics["recovery"]["f1"].get<double>() > 0.5);
}

TEST_CASE("missing data file exits with a validation error") {
  auto dir = testing::temp_dir("cli_missing");
  auto r = cli({"discover", "--data", (dir / "nope.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("\"kind\":\"NotFound\"") != std::string::npos);
}

TEST_CASE("min-divergence flag flips the search direction") {
  auto dir = testing::temp_dir("cli_min");
  auto sim = (dir / "sim").string();
  REQUIRE(cli({"simulate", "--n", "200", "--d", "2", "--out", sim}).code == 0);
  auto r = cli({"discover", "--data", sim + "/data.csv", "--epochs", "20", "--min-divergence", "--out",
                (dir / "o").string()});
  REQUIRE(r.code == 0);
  auto report = read_json_file((dir / "o" / "report.json").string());
  CHECK(report["config"]["objective"]["direction"] == "minimize-divergence");
}

TEST_CASE("config echo reproduces the run") {
  auto dir = testing::temp_dir("cli_echo");
  auto a = (dir / "a").string();
  REQUIRE(cli({"simulate", "--n", "150", "--d", "2", "--seed", "9", "--out", a}).code == 0);
  auto b = (dir / "b").string();
  REQUIRE(cli({"simulate", "--config", a + "/config_echo.json", "--out", b}).code == 0);
  CHECK(read_json_file(a + "/truth.json") == read_json_file(b + "/truth.json"));
}

TEST_CASE("bad flag values are validation errors") {
  CHECK(cli({"simulate", "--setting", "imaginary", "--out", testing::temp_dir("cli_bad").string()}).code ==
        kExitValidation);
  CHECK(cli({"frobnicate"}).code == kExitValidation);
}
