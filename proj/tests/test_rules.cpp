#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diffsub/error.hpp"
#include "diffsub/rules.hpp"
#include "helpers.hpp"

using namespace diffsub;

namespace {

SoftRule random_rule(std::size_t d, Rng& rng) {
  SoftRule r;
  r.t = rng.uniform(0.1, 0.4);
  for (std::size_t j = 0; j < d; ++j) {
    r.a.push_back(rng.uniform(0.0, 0.4));
    r.b.push_back(rng.uniform(0.6, 1.0));
    r.rho.push_back(rng.uniform(0.2, 1.0));
  }
  return r;
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

}  // namespace

TEST_CASE("soft predicate limits") {
  CHECK(soft_predicate(0.5, 0.0, 1.0, 0.01) == doctest::Approx(1.0));
  CHECK(soft_predicate(-1.0, 0.0, 1.0, 0.01) == doctest::Approx(0.0));
  CHECK(soft_predicate(2.0, 0.0, 1.0, 0.01) == doctest::Approx(0.0));
  // At a threshold one exponential is 1 and the other negligible.
  CHECK(soft_predicate(0.0, 0.0, 1.0, 0.01) == doctest::Approx(0.5));
  CHECK(std::isfinite(soft_predicate(1e6, 0.0, 1.0, 1e-3)));
}

TEST_CASE("soft predicate rises then falls across the interval") {
  double prev = 0.0;
  for (double x = -1.0; x <= 0.5; x += 0.01) {
    double p = soft_predicate(x, 0.0, 1.0, 0.1);
    CHECK(p >= prev);
    prev = p;
  }
  prev = soft_predicate(0.5, 0.0, 1.0, 0.1);
  for (double x = 0.5; x <= 2.0; x += 0.01) {
    double p = soft_predicate(x, 0.0, 1.0, 0.1);
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("soft membership equals the weighted harmonic mean") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto rule = random_rule(4, rng);
    rule.rho[1] = -0.3;  // inactive feature
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform();
    double w = 0.0, denom = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      double wj = std::max(0.0, rule.rho[j]);
      double z = 1.0 + std::exp(-(x[j] - rule.a[j]) / rule.t) + std::exp(-(rule.b[j] - x[j]) / rule.t);
      w += wj;
      denom += wj * z;
    }
    CHECK(std::abs(soft_membership(rule, x) - w / denom) < 1e-12);
  }
}

TEST_CASE("equal predicates give that predicate as membership") {
  SoftRule rule{{0.0, 0.0}, {1.0, 1.0}, {0.3, 2.0}, 0.2};
  std::vector<double> x = {0.4, 0.4};
  CHECK(soft_membership(rule, x) == doctest::Approx(soft_predicate(0.4, 0.0, 1.0, 0.2)));
}

TEST_CASE("membership jacobians match central differences") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto ds = testing::random_dataset(30, 3, 100 + rep);
    auto rule = random_rule(3, rng);
    auto mb = membership_batch(rule, ds);
    const double h = 1e-4;
    for (std::size_t j = 0; j < 3; ++j) {
      for (auto [param, jac] : {std::pair{&SoftRule::a, &mb.dm_da}, std::pair{&SoftRule::b, &mb.dm_db},
                                std::pair{&SoftRule::rho, &mb.dm_drho}}) {
        auto at = [&](double step) {
          auto r = rule;
          (r.*param)[j] += step;
          return memberships(r, ds);
        };
        auto m1 = at(h), m_1 = at(-h), m2 = at(2 * h), m_2 = at(-2 * h);
        for (std::size_t i = 0; i < ds.rows(); ++i) {
          // Five-point stencil.
          double fd = (8 * (m1[i] - m_1[i]) - (m2[i] - m_2[i])) / (12 * h);
          CHECK(rel_err((*jac)[i * 3 + j], fd) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("all-zero weights and bad temperatures are rejected") {
  auto ds = testing::random_dataset(10, 2, 1);
  SoftRule rule{{0.0, 0.0}, {1.0, 1.0}, {-1.0, 0.0}, 0.2};
  CHECK_THROWS_AS(memberships(rule, ds), Error);
  CHECK_THROWS_AS(check_temperature(0.0), Error);
  CHECK_THROWS_AS(check_temperature(-0.1), Error);
}

TEST_CASE("harden drops light and vacuous features and clips to the data range") {
  auto ds = testing::random_dataset(200, 3, 9);
  SoftRule rule{{0.2, -5.0, 0.3}, {0.6, 5.0, 0.7}, {1.0, 1.0, 1e-4}, 0.1};
  auto hard = harden(rule, kWeightEps, kVacuousMargin, ds);
  REQUIRE(hard.conditions.size() == 1);
  CHECK(hard.conditions[0].feature == 0);
  CHECK(hard.conditions[0].lo == 0.2);

  SoftRule wide{{-1.0}, {0.5}, {1.0}, 0.1};
  auto one = testing::random_dataset(100, 1, 2);
  auto h2 = harden(wide, kWeightEps, kVacuousMargin, one);
  REQUIRE(h2.conditions.size() == 1);
  CHECK(h2.conditions[0].lo >= one.feature_info()[0].observed_min - 1e-12);
  // Clipping does not move any row across the boundary.
  for (std::size_t i = 0; i < one.rows(); ++i) {
    double x = one.feature(i, 0);
    CHECK(h2.contains(one.row(i)) == (x > -1.0 && x < 0.5));
  }
}

TEST_CASE("empty hard rule covers everything") {
  auto ds = testing::random_dataset(15, 2, 4);
  HardRule rule;
  auto m = rule.membership(ds);
  CHECK(std::count(m.begin(), m.end(), 1) == 15);
  CHECK(rule.describe(ds) == "(all)");
}

TEST_CASE("initial rule sits near the 15th and 85th percentiles") {
  auto ds = testing::random_dataset(1000, 2, 8);
  Rng rng(0);
  auto rule = initial_rule(ds, 0.2, rng);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(rule.a[j] - 0.15) < 0.04);
    CHECK(std::abs(rule.b[j] - 0.85) < 0.04);
    CHECK(rule.rho[j] == 0.5);
  }
  CHECK(rule.t == 0.2);
}
