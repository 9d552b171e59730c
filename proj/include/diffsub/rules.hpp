#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/random.hpp"

namespace diffsub {

// Logits are clamped to this magnitude before exponentiation.
inline constexpr double kLogitClamp = 30.0;

// One interval condition lo < x_j < hi, encoded units.
struct Condition {
  std::size_t feature = 0;
  double lo = 0.0;
  double hi = 0.0;
};

// Conjunctive box rule. An empty rule covers the whole population.
struct HardRule {
  std::vector<Condition> conditions;

  bool contains(std::span<const double> x) const;
  std::vector<int> membership(const Dataset& ds) const;
  // "age ∈ (36, 63) & chol ∈ (235, 500)", or "(all)" for an empty rule.
  std::string describe(const Dataset& ds) const;
  std::vector<DecodedCondition> decode(const Dataset& ds) const;
};

// Differentiable relaxation of a box rule: per-feature thresholds (a, b),
// unconstrained weight parameters rho with w = max(0, rho), temperature t.
struct SoftRule {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> rho;
  double t = 0.2;

  std::size_t dims() const { return a.size(); }
  double weight(std::size_t j) const { return rho[j] > 0.0 ? rho[j] : 0.0; }
  double total_weight() const;
};

// 1 / (1 + exp(-(x - a)/t) + exp(-(b - x)/t)), logits clamped.
double soft_predicate(double x, double a, double b, double t);

// Weighted harmonic mean of the soft predicates over features with w_j > 0.
double soft_membership(const SoftRule& rule, std::span<const double> x);

// Memberships for every row plus row-major n x d Jacobian blocks.
struct MembershipBatch {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> m;
  std::vector<double> dm_da;
  std::vector<double> dm_db;
  std::vector<double> dm_drho;
};

MembershipBatch membership_batch(const SoftRule& rule, const Dataset& ds);

// Memberships only.
std::vector<double> memberships(const SoftRule& rule, const Dataset& ds);

// Extraction defaults.
inline constexpr double kWeightEps = 1e-3;
inline constexpr double kVacuousMargin = 0.01;

// Keeps features with w_j > weight_eps whose interval excludes at least a
// vacuous_margin fraction of the observed values; bounds beyond the data
// range are pulled in to the range without changing any row's membership.
HardRule harden(const SoftRule& rule, double weight_eps, double vacuous_margin, const Dataset& ds);

// Thresholds at the 15th/85th percentile of each feature with +-2% range
// jitter; rho = 0.5 everywhere.
SoftRule initial_rule(const Dataset& ds, double temperature, Rng& rng);

void check_temperature(double t);

}  // namespace diffsub
