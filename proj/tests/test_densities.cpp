#include <doctest.h>

#include <cmath>
#include <numeric>

#include "diffsub/densities.hpp"
#include "diffsub/error.hpp"
#include "diffsub/random.hpp"

using namespace diffsub;

namespace {

WeightedPmf random_pmf(std::size_t k, Rng& rng) {
  WeightedPmf p;
  double s = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    p.probs.push_back(rng.uniform() + 1e-3);
    s += p.probs.back();
  }
  for (auto& v : p.probs) v /= s;
  p.total_weight = 1.0;
  return p;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) h -= v > 0 ? v * std::log(v) : 0.0;
  return h;
}

}  // namespace

TEST_CASE("weighted pmf is normalized and floored") {
  std::vector<double> y = {0, 0, 1, 1, 1};
  std::vector<double> w = {1.0, 0.5, 0.25, 0.25, 0.0};
  auto pmf = fit_discrete(y, w, 3);
  CHECK(std::accumulate(pmf.probs.begin(), pmf.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pmf.probs[0] == doctest::Approx(0.75));
  CHECK(pmf.probs[2] > 0.0);
  CHECK(pmf.probs[2] < 1e-8);
  CHECK(pmf.total_weight == 2.0);
  CHECK(pmf.mean() == doctest::Approx(0.25));
}

TEST_CASE("pmf fitting rejects bad labels and zero weight") {
  std::vector<double> y = {0, 3};
  std::vector<double> w = {1, 1};
  CHECK_THROWS_AS(fit_discrete(y, w, 2), Error);
  std::vector<double> y2 = {0, 1};
  std::vector<double> zero = {0, 0};
  CHECK_THROWS_AS(fit_discrete(y2, zero, 2), Error);
}

TEST_CASE("exact js divergence matches the entropy form") {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    auto p = random_pmf(2 + rep % 6, rng);
    auto q = random_pmf(p.probs.size(), rng);
    std::vector<double> mix(p.probs.size());
    for (std::size_t l = 0; l < mix.size(); ++l) mix[l] = 0.5 * (p.probs[l] + q.probs[l]);
    double oracle = entropy(mix) - 0.5 * (entropy(p.probs) + entropy(q.probs));
    double js = js_divergence_exact(p, q);
    CHECK(std::abs(js - oracle) < 1e-10);
    CHECK(js == doctest::Approx(js_divergence_exact(q, p)));
    CHECK(js >= -1e-15);
    CHECK(js <= std::log(2.0) + 1e-12);
  }
}

TEST_CASE("disjoint pmfs reach ln 2") {
  WeightedPmf p{{1.0, 0.0}, 1.0};
  WeightedPmf q{{0.0, 1.0}, 1.0};
  CHECK(js_divergence_exact(p, q) == doctest::Approx(std::log(2.0)));
  CHECK(js_divergence_exact(p, p) == 0.0);
}

TEST_CASE("kde integrates to one") {
  Rng rng(4);
  std::vector<double> y, w;
  for (int i = 0; i < 300; ++i) {
    y.push_back(rng.normal() * 2.0 + 1.0);
    w.push_back(rng.uniform());
  }
  auto kde = fit_kde(y, w);
  double integral = 0.0;
  const double step = 0.01;
  for (double t = -20.0; t <= 20.0; t += step) integral += kde.density(t) * step;
  CHECK(std::abs(integral - 1.0) < 1e-3);
}

TEST_CASE("kde bandwidth follows scott's rule with the kish size") {
  std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> w = {1.0, 1.0, 1.0, 0.5};
  auto kde = fit_kde(y, w);
  CHECK(kde.n_eff == doctest::Approx(3.5 * 3.5 / 3.25));
  double mean = (0 + 1 + 2 + 1.5) / 3.5;
  double var = (mean * mean + (1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) +
                0.5 * (3 - mean) * (3 - mean)) / 3.5;
  CHECK(kde.weighted_mean == doctest::Approx(mean));
  CHECK(kde.bandwidth == doctest::Approx(std::sqrt(var) * std::pow(kde.n_eff, -0.2)));
  CHECK_FALSE(kde.degenerate);
}

TEST_CASE("constant sample gets the fallback bandwidth") {
  std::vector<double> y = {2.0, 2.0, 2.0};
  std::vector<double> w = {1.0, 1.0, 1.0};
  auto kde = fit_kde(y, w);
  CHECK(kde.degenerate);
  CHECK(kde.bandwidth > 0.0);
  CHECK(std::isfinite(kde.density(2.0)));
}

TEST_CASE("unfitted density cannot be evaluated") {
  TargetDensity p;
  CHECK_FALSE(is_fitted(p));
  CHECK_THROWS_AS(evaluate(p, 0.0), Error);
}

TEST_CASE("sample js with full memberships equals the exact value") {
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    auto p = random_pmf(4, rng);
    auto q = random_pmf(4, rng);
    // One row per class, membership L * p_l, so each group mean is an
    // expectation under its own pmf.
    std::vector<double> labels = {0, 1, 2, 3};
    std::vector<double> m0, m1;
    for (std::size_t l = 0; l < 4; ++l) {
      m0.push_back(4.0 * p.probs[l]);
      m1.push_back(4.0 * q.probs[l]);
    }
    auto est = js_divergence(TargetDensity{p}, TargetDensity{q}, {labels, m0}, {labels, m1});
    CHECK(std::abs(est.raw - js_divergence_exact(p, q)) < 1e-10);
    auto ratio = log_density_ratio(TargetDensity{p}, TargetDensity{q}, labels);
    for (std::size_t l = 0; l < 4; ++l) {
      CHECK(ratio[l] == doctest::Approx(std::log(p.probs[l] / (0.5 * (p.probs[l] + q.probs[l])))));
      CHECK(est.coeff.group0[l] == doctest::Approx(0.5 * ratio[l] / 4.0));
    }
  }
}
