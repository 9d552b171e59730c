#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diffsub/error.hpp"
#include "diffsub/eval.hpp"
#include "diffsub/synthgen.hpp"

using namespace diffsub;

TEST_CASE("recovery metrics from a confusion table") {
  std::vector<int> pred = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  std::vector<int> truth = {1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  auto m = recovery(pred, truth);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 6);
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.accuracy == doctest::Approx(0.8));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty prediction reports zero with undefined flags") {
  std::vector<int> pred(6, 0);
  std::vector<int> truth = {1, 0, 0, 1, 0, 0};
  auto m = recovery(pred, truth);
  CHECK(m.f1 == 0.0);
  CHECK(m.precision_undefined);
  CHECK_FALSE(m.recall_undefined);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("perfect prediction scores one") {
  std::vector<int> v = {0, 1, 1, 0};
  auto m = recovery(v, v);
  CHECK(m.f1 == 1.0);
  CHECK(m.accuracy == 1.0);
}

TEST_CASE("length mismatch is an error") {
  std::vector<int> a = {0, 1};
  std::vector<int> b = {0, 1, 1};
  try {
    recovery(a, b);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
}

TEST_CASE("mean and standard error") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  auto s = mean_se(v);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(s.count == 4);
}

TEST_CASE("cell seeds are shared across tau and differ across replicates") {
  auto a = cell_seeds(1, 0, 0);
  auto b = cell_seeds(1, 0, 1);
  auto c = cell_seeds(1, 1, 0);
  CHECK(a.data != b.data);
  CHECK(a.data != c.data);
  CHECK(a.data == cell_seeds(1, 0, 0).data);
}

TEST_CASE("results csv has one line per cell") {
  BenchmarkRow row;
  row.tau = 4.0;
  row.ok = true;
  row.status = "ok";
  row.recovery.f1 = 0.5;
  auto csv = results_csv({row, row}, false);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("setting,tau,replicate,f1", 0) == 0);
}

TEST_CASE("oracle rule has small effect error") {
  SynthConfig sc;
  sc.seed = 11;
  auto data = generate(sc);
  auto rule = box_rule(data.truth.boxes[0], data.dataset);
  auto m = effect_metrics(data.dataset, rule);
  CHECK(m.pehe < 0.3);
  CHECK(m.n0_in > 0);
  CHECK(m.n1_in > 0);
}

TEST_CASE("summary csv averages successful cells") {
  BenchmarkRow a, b, failed;
  a.tau = b.tau = failed.tau = 4.0;
  a.ok = b.ok = true;
  a.status = b.status = "ok";
  a.recovery.f1 = 0.6;
  b.recovery.f1 = 0.8;
  failed.status = "timeout";
  auto csv = summary_csv({a, b, failed});
  CHECK(csv.find("observational,4,2,0.7") != std::string::npos);
}
