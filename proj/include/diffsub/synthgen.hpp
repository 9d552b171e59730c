#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/rules.hpp"

namespace diffsub {

enum class Setting { Observational, Randomized, Demographic, FullMediation, NullEffect };

std::string setting_name(Setting s);
Setting parse_setting(const std::string& name);

struct SynthConfig {
  std::size_t n = 2000;
  std::size_t d = 5;
  Setting setting = Setting::Observational;
  double tau = 4.0;    // effect inside the planted subgroup
  double eta = 1.0;    // effect outside
  double sigma2 = 0.5;  // noise variance
  double target_coverage = 0.3;
  double mu_scale = 0.3;  // demographic shift mu_j ~ U(-mu_scale, mu_scale)
  std::size_t subgroups = 1;  // 2 plants two disjoint boxes sharing one feature
  // The last `irrelevant` columns are pure noise: zero coefficients in
  // beta_Y, beta_A and mu, and never part of a planted box.
  std::size_t irrelevant = 0;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

// Axis-aligned planted box lo_k < x_{features[k]} < hi_k.
struct SynthBox {
  std::vector<std::size_t> features;
  std::vector<double> lo;
  std::vector<double> hi;
};

struct SynthTruth {
  std::vector<SynthBox> boxes;
  std::vector<int> membership;  // union of boxes
  std::vector<std::vector<int>> box_membership;
  std::vector<double> beta_y;
  std::vector<double> beta_a;
  std::vector<double> mu;
  double coverage = 0.0;
  std::size_t placement_attempts = 0;
};

struct SynthData {
  DatasetInput input;  // raw columns, as written to CSV
  Dataset dataset;
  SynthTruth truth;
};

// Y = beta_Y^T X + s*(X)(+-tau/2) + (1 - s*(X))(+-eta/2) + N(0, sigma2), the
// sign following A. X ~ U(0,1)^d, with P(A=1|X) = sigmoid(beta_A^T X)
// (observational), P(A=1) = 0.5 (randomized), or X += A * mu (demographic).
SynthData generate(const SynthConfig& cfg);

// A ~ Bernoulli(0.5), X = U(0,1)^d + A * mu, Y = beta_Y^T X + noise: the
// attribute reaches Y only through X.
SynthData generate_full_mediation(const SynthConfig& cfg);

// A planted box as a hard rule over the encoded features of ds.
HardRule box_rule(const SynthBox& box, const Dataset& ds);

}  // namespace diffsub
