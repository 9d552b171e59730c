#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "diffsub/error.hpp"
#include "diffsub/forest.hpp"
#include "diffsub/random.hpp"

using namespace diffsub;

namespace {

TrainingMatrix make_matrix(std::size_t n, bool classify, std::uint64_t seed) {
  Rng rng(seed);
  TrainingMatrix m;
  m.rows = n;
  m.cols = 3;
  for (std::size_t i = 0; i < n; ++i) {
    double x0 = rng.uniform(), x1 = rng.uniform(), x2 = rng.uniform();
    m.x.insert(m.x.end(), {x0, x1, x2});
    if (classify) {
      m.y.push_back(x0 + x1 > 1.0 ? 1.0 : 0.0);
    } else {
      m.y.push_back(std::sin(3.0 * x0) + 2.0 * x1);
    }
  }
  m.n_classes = classify ? 2 : 0;
  return m;
}

}  // namespace

TEST_CASE("forest on pure labels predicts that label with certainty") {
  TrainingMatrix m;
  m.rows = 20;
  m.cols = 1;
  for (std::size_t i = 0; i < 20; ++i) {
    m.x.push_back(static_cast<double>(i));
    m.y.push_back(1.0);
  }
  m.n_classes = 2;
  auto f = ForestModel::fit(m, ForestTask::Classify, 1, {10, 2, 0});
  std::vector<double> out(2);
  std::vector<double> x = {3.5};
  f.predict_row(x, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 1.0);
}

TEST_CASE("classification forest separates a linear boundary") {
  auto train = make_matrix(1000, true, 1);
  auto f = ForestModel::fit(train, ForestTask::Classify, 7);
  auto test = make_matrix(1000, true, 2);
  auto pred = f.predict(test.x, test.rows);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    int label = pred[2 * i + 1] > 0.5 ? 1 : 0;
    correct += label == static_cast<int>(test.y[i]);
  }
  // Labels are noise free, so in-sample and near-boundary errors are rare.
  auto in_sample = f.predict(train.x, train.rows);
  std::size_t fit = 0;
  for (std::size_t i = 0; i < train.rows; ++i) fit += (in_sample[2 * i + 1] > 0.5) == (train.y[i] > 0.5);
  CHECK(static_cast<double>(fit) / train.rows >= 0.99);
  CHECK(static_cast<double>(correct) / test.rows >= 0.95);
}

TEST_CASE("regression forest explains a smooth target") {
  auto train = make_matrix(1000, false, 3);
  auto f = ForestModel::fit(train, ForestTask::Regress, 9);
  auto test = make_matrix(500, false, 4);
  auto pred = f.predict(test.x, test.rows);
  double mean = 0.0;
  for (double y : test.y) mean += y / test.rows;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    ss_res += (pred[i] - test.y[i]) * (pred[i] - test.y[i]);
    ss_tot += (test.y[i] - mean) * (test.y[i] - mean);
  }
  CHECK(1.0 - ss_res / ss_tot >= 0.95);
}

TEST_CASE("forest predictions do not depend on the worker count") {
  auto train = make_matrix(400, false, 5);
  setenv("DIFFSUB_THREADS", "1", 1);
  auto a = ForestModel::fit(train, ForestTask::Regress, 3).predict(train.x, train.rows);
  setenv("DIFFSUB_THREADS", "4", 1);
  auto b = ForestModel::fit(train, ForestTask::Regress, 3).predict(train.x, train.rows);
  unsetenv("DIFFSUB_THREADS");
  CHECK(a == b);
}

TEST_CASE("permutation importance ranks the informative column first") {
  auto train = make_matrix(600, false, 6);
  auto f = ForestModel::fit(train, ForestTask::Regress, 2, {50, 2, 0});
  auto imp = permutation_importance(f, train, 1);
  REQUIRE(imp.size() == 3);
  CHECK(imp[1] > imp[2]);
  CHECK(imp[0] > imp[2]);
}

TEST_CASE("local divergence is the squared gap to the group mean") {
  std::vector<double> pred = {1.0, 2.0, 4.0};
  std::vector<int> a = {0, 1, 1};
  auto c = local_divergence_continuous(pred, a, 0.5, 3.0);
  CHECK(c[0] == doctest::Approx(0.25));
  CHECK(c[1] == doctest::Approx(1.0));
  CHECK(c[2] == doctest::Approx(1.0));
}
