#include <doctest.h>

#include <algorithm>

#include "diffsub/error.hpp"
#include "diffsub/eval.hpp"
#include "diffsub/synthgen.hpp"
#include "diffsub/trainer.hpp"
#include "helpers.hpp"

using namespace diffsub;

TEST_CASE("temperature decays linearly over the run") {
  TrainConfig cfg;
  CHECK(temperature_at(cfg, 0) == doctest::Approx(0.2));
  CHECK(temperature_at(cfg, 250) == doctest::Approx(0.125));
  CHECK(temperature_at(cfg, 500) == doctest::Approx(0.05));
  for (std::size_t e = 1; e <= 500; ++e) CHECK(temperature_at(cfg, e) < temperature_at(cfg, e - 1));
  CHECK(warmup_epochs(cfg) == 100);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.warmup_fraction = 1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = {};
  cfg.temp_end = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = {};
  cfg.refit_every = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("planted box is recovered on clean data") {
  SynthConfig sc;
  sc.n = 1000;
  sc.seed = 1;
  auto data = generate(sc);
  TrainConfig tc;
  tc.seed = 1;
  auto report = train_once(data.dataset, tc).report;
  auto rec = recovery(report.rule.membership(data.dataset), data.truth.membership);
  CHECK(rec.f1 >= 0.85);
  // One record per epoch plus the final iterate at fresh densities.
  CHECK(report.trace.size() == tc.epochs + 1);
  CHECK(report.best_epoch >= warmup_epochs(tc));
  CHECK(report.effect.has_value());
}

TEST_CASE("single restart equals one training run") {
  auto ds = testing::random_dataset(120, 2, 7, Scaling::Standardize);
  TrainConfig tc;
  tc.epochs = 60;
  tc.forest_trees = 10;
  tc.seed = 4;
  auto once = train_once(ds, tc).report;
  auto best = train_restarts(ds, tc);
  CHECK(once.rule_text == best.rule_text);
  CHECK(once.objective == best.objective);
  CHECK(best.restart == 0);
}

TEST_CASE("trace marks refit epochs") {
  auto ds = testing::random_dataset(100, 2, 8, Scaling::Standardize);
  TrainConfig tc;
  tc.epochs = 40;
  tc.refit_every = 10;
  tc.forest_trees = 10;
  auto report = train_once(ds, tc).report;
  REQUIRE(report.trace.size() == 41);
  CHECK(report.trace.back().epoch == 40);
  for (const auto& r : report.trace) {
    CHECK(r.fresh == (r.epoch % 10 == 0));
    CHECK(r.generality >= 0.0);
    CHECK(r.generality <= 1.0 + 1e-12);
  }
}

TEST_CASE("second subgroup is searched on the rows the first leaves") {
  SynthConfig sc;
  sc.subgroups = 2;
  sc.seed = 3;
  auto data = generate(sc);
  TrainConfig tc;
  tc.epochs = 100;
  tc.forest_trees = 20;
  auto found = discover_multiple(data.dataset, tc, 2);
  REQUIRE(found.reports.size() == 2);
  CHECK(found.warnings.empty());
  auto first = found.reports[0].rule.membership(data.dataset);
  auto covered = static_cast<std::size_t>(std::count(first.begin(), first.end(), 1));
  CHECK(found.reports[0].rows == data.dataset.rows());
  CHECK(found.reports[1].rows == data.dataset.rows() - covered);
}

TEST_CASE("multi-subgroup discovery stops on small remainders") {
  auto ds = testing::random_dataset(80, 2, 9, Scaling::Standardize);
  TrainConfig tc;
  tc.epochs = 30;
  tc.forest_trees = 10;
  auto found = discover_multiple(ds, tc, 3);
  CHECK(found.reports.size() < 3);
  CHECK_FALSE(found.warnings.empty());
}

TEST_CASE("best of several restarts is at least the first run") {
  SynthConfig sc;
  sc.n = 600;
  sc.seed = 2;
  auto data = generate(sc);
  TrainConfig tc;
  tc.epochs = 150;
  tc.forest_trees = 20;
  auto single = train_once(data.dataset, tc).report;
  tc.restarts = 5;
  auto best = train_restarts(data.dataset, tc);
  CHECK(best.objective >= single.objective);
  CHECK(best.restart < 5);
}
