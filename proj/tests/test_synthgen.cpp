#include <doctest.h>

#include <cmath>

#include "diffsub/error.hpp"
#include "diffsub/synthgen.hpp"
#include "diffsub/trainer.hpp"

using namespace diffsub;

TEST_CASE("generator is deterministic per seed") {
  SynthConfig sc;
  sc.n = 300;
  sc.seed = 12;
  auto a = generate(sc);
  auto b = generate(sc);
  CHECK(a.dataset.features() == b.dataset.features());
  CHECK(a.dataset.target() == b.dataset.target());
  CHECK(a.truth.membership == b.truth.membership);
  sc.seed = 13;
  CHECK(generate(sc).dataset.target() != a.dataset.target());
}

TEST_CASE("planted coverage lands near the target") {
  for (auto setting : {Setting::Observational, Setting::Randomized, Setting::Demographic}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthConfig sc;
      sc.setting = setting;
      sc.seed = seed;
      auto data = generate(sc);
      CHECK(data.truth.coverage >= 0.25);
      CHECK(data.truth.coverage <= 0.35);
    }
  }
}

TEST_CASE("true effects are tau inside and eta outside") {
  SynthConfig sc;
  sc.seed = 2;
  auto data = generate(sc);
  const auto& eff = *data.dataset.truth_effect();
  for (std::size_t i = 0; i < eff.size(); ++i) {
    CHECK(eff[i] == (data.truth.membership[i] ? 4.0 : 1.0));
  }
}

TEST_CASE("noise-free randomized data gives the oracle effect exactly") {
  SynthConfig sc;
  sc.setting = Setting::Randomized;
  sc.sigma2 = 0.0;
  sc.seed = 5;
  auto data = generate(sc);
  // Without noise Y = beta^T X +- tau/2, so each row's residual after the
  // linear part is exactly +-2.
  const auto& x = data.input.features;
  for (std::size_t i = 0; i < sc.n; ++i) {
    if (!data.truth.membership[i]) continue;
    double lin = 0.0;
    for (std::size_t j = 0; j < sc.d; ++j) lin += data.truth.beta_y[j] * x[j].values[i];
    double sign = data.input.attribute[i] ? 1.0 : -1.0;
    CHECK(data.input.target[i] - lin == doctest::Approx(sign * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("oracle rule recovers the planted membership") {
  SynthConfig sc;
  sc.seed = 7;
  auto data = generate(sc);
  auto rule = box_rule(data.truth.boxes[0], data.dataset);
  CHECK(rule.membership(data.dataset) == data.truth.membership);
}

TEST_CASE("null and mediation controls") {
  SynthConfig sc;
  sc.setting = Setting::NullEffect;
  sc.seed = 1;
  auto null_data = generate(sc);
  for (double e : *null_data.dataset.truth_effect()) CHECK(e == sc.eta);
  sc.setting = Setting::FullMediation;
  auto med = generate_full_mediation(sc);
  for (double e : *med.dataset.truth_effect()) CHECK(e == 0.0);
  for (int m : med.truth.membership) CHECK(m == 0);
}

TEST_CASE("irrelevant columns carry no signal") {
  SynthConfig sc;
  sc.d = 8;
  sc.irrelevant = 5;
  sc.seed = 3;
  auto data = generate(sc);
  for (std::size_t j = 3; j < 8; ++j) {
    CHECK(data.truth.beta_y[j] == 0.0);
    CHECK(data.truth.beta_a[j] == 0.0);
  }
  for (auto f : data.truth.boxes[0].features) CHECK(f < 3);
  sc.irrelevant = 7;
  CHECK_THROWS_AS(validate(sc), Error);
}

TEST_CASE("oracle effect converges to tau on large randomized samples") {
  SynthConfig sc;
  sc.setting = Setting::Randomized;
  sc.n = 20000;
  sc.seed = 4;
  auto data = generate(sc);
  auto effect = subgroup_effect(data.dataset, box_rule(data.truth.boxes[0], data.dataset));
  const double sigma = std::sqrt(sc.sigma2);
  CHECK(std::abs(effect.tau_hat - sc.tau) < 4.0 * sigma * std::sqrt(2.0 / (0.3 * sc.n / 2.0)));
}
