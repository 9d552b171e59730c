#include <doctest.h>

#include "diffsub/cli.hpp"
#include "diffsub/error.hpp"
#include "diffsub/serialize.hpp"
#include "helpers.hpp"

using namespace diffsub;

TEST_CASE("train config round-trips losslessly") {
  TrainConfig cfg;
  cfg.epochs = 123;
  cfg.lr = 0.0123456789;
  cfg.seed = 0xFFFFFFFFFFFFull;
  cfg.warmup_fraction = 0.15;
  cfg.objective.lambda = 0.25;
  cfg.objective.direction = Direction::MinimizeDivergence;
  cfg.objective.kl_normalization = KlNormalization::SubgroupWeight;
  cfg.objective.covariate_normalization = CovariateNormalization::Sum;
  auto j = to_json(cfg);
  auto back = train_config_from_json(Json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(back.lr == cfg.lr);
  CHECK(back.seed == cfg.seed);
  CHECK(back.objective.direction == Direction::MinimizeDivergence);
}

TEST_CASE("run config round-trips losslessly") {
  RunConfig cfg;
  cfg.command = "benchmark";
  cfg.out = "results";
  cfg.scaling = Scaling::MinMax;
  cfg.synth.setting = Setting::Demographic;
  cfg.synth.irrelevant = 2;
  cfg.grid.taus = {1.5, 4.0};
  cfg.grid.settings = {Setting::Randomized};
  auto j = to_json(cfg);
  CHECK(to_json(run_config_from_json(Json::parse(j.dump()))).dump() == j.dump());
}

TEST_CASE("config readers reject unknown keys and bad types") {
  CHECK_THROWS_AS(train_config_from_json(Json{{"epochz", 5}}), Error);
  CHECK_THROWS_AS(train_config_from_json(Json{{"epochs", "many"}}), Error);
  CHECK_THROWS_AS(objective_config_from_json(Json{{"direction", "sideways"}}), Error);
  auto partial = train_config_from_json(Json{{"epochs", 7}});
  CHECK(partial.epochs == 7);
  CHECK(partial.lr == TrainConfig{}.lr);
}

TEST_CASE("soft rule and schema round-trip") {
  SoftRule rule{{0.1, -0.2}, {0.9, 1.3}, {0.5, -0.01}, 0.07};
  auto back = soft_rule_from_json(Json::parse(to_json(rule).dump()));
  CHECK(back.a == rule.a);
  CHECK(back.b == rule.b);
  CHECK(back.rho == rule.rho);
  CHECK(back.t == rule.t);
  std::vector<ColumnSchema> schema = {{"x", ColumnKind::Numeric, {}},
                                      {"c", ColumnKind::Categorical, {"p", "q"}},
                                      {"a", ColumnKind::Attribute, {}},
                                      {"y", ColumnKind::TargetDiscrete, {}}};
  auto s2 = schema_from_json(to_json(schema));
  REQUIRE(s2.size() == 4);
  CHECK(s2[1].categories == schema[1].categories);
  CHECK(s2[3].kind == ColumnKind::TargetDiscrete);
}

TEST_CASE("named rule from json selects the same rows") {
  auto ds = testing::random_dataset(100, 2, 3, Scaling::Standardize);
  HardRule rule;
  rule.conditions.push_back({1, -0.5, 0.7});
  Json report = {{"rule", rule_to_json(rule, ds)}};
  auto named = named_conditions_from_report(Json::parse(report.dump()));
  REQUIRE(named.size() == 1);
  CHECK(named[0].feature == "x1");
  CHECK(apply_named_rule(named, ds) == rule.membership(ds));
}

TEST_CASE("reading a missing or malformed json file") {
  auto dir = testing::temp_dir("json");
  try {
    read_json_file((dir / "none.json").string());
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotFound);
  }
  write_text_file((dir / "bad.json").string(), "{not json");
  try {
    read_json_file((dir / "bad.json").string());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
}
