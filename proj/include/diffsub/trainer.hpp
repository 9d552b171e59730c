#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/densities.hpp"
#include "diffsub/objective.hpp"
#include "diffsub/rules.hpp"

namespace diffsub {

struct TrainConfig {
  std::size_t epochs = 500;
  double lr = 0.005;
  double temp_start = 0.2;
  double temp_end = 0.05;
  std::size_t refit_every = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;
  double weight_eps = kWeightEps;
  double vacuous_margin = kVacuousMargin;
  std::size_t forest_trees = 100;
  // Leading fraction of epochs in which the KL terms are averaged over the
  // subgroup weight instead of n_a. Only later epochs compete for best iterate.
  double warmup_fraction = 0.2;
};

void validate(const TrainConfig& cfg);

// Number of leading warm-up epochs, floor(warmup_fraction * K).
std::size_t warmup_epochs(const TrainConfig& cfg);

// Temperature used at epoch e: linear from temp_start (e = 0) to temp_end (e = K).
double temperature_at(const TrainConfig& cfg, std::size_t epoch);

struct TraceRecord {
  std::size_t epoch = 0;
  double t = 0.0;
  double generality = 0.0;
  double exceptionality = 0.0;
  double covariate_dep = 0.0;
  double loss = 0.0;
  bool fresh = false;  // densities refit this epoch
};

struct SubgroupEffect {
  double tau_hat = 0.0;
  double mean0 = 0.0;
  double mean1 = 0.0;
  std::size_t n0 = 0;  // rows of each population inside the rule
  std::size_t n1 = 0;
};

// Difference of in-subgroup group means of the target.
SubgroupEffect subgroup_effect(const Dataset& ds, const HardRule& rule);

struct DiscoveryReport {
  HardRule rule;  // encoded units
  std::vector<DecodedCondition> conditions;
  std::string rule_text;
  SoftRule soft_rule;  // winning iterate
  double coverage0 = 0.0;
  double coverage1 = 0.0;
  std::size_t rows = 0;
  TargetDensity p0;
  TargetDensity p1;
  double generality = 0.0;
  double exceptionality = 0.0;
  double exceptionality_raw = 0.0;
  double covariate_dep = 0.0;
  double objective = 0.0;  // loss of the winning iterate at fresh densities
  std::size_t best_epoch = 0;
  std::optional<SubgroupEffect> effect;
  std::string effect_note;
  std::vector<TraceRecord> trace;
  TrainConfig config;
  std::uint64_t seed = 0;
  std::size_t restart = 0;
};

struct RunControl {
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct TrainResult {
  SoftRule rule;
  DiscoveryReport report;
};

// One optimization run: K epochs of memberships, density refits every
// refit_every epochs, objective and Adam ascent, linear annealing. The
// winner is the iterate with the highest loss at freshly fitted densities.
TrainResult train_once(const Dataset& ds, const TrainConfig& cfg, const RunControl* control = nullptr);

// Runs seeds seed, seed+1, ... and keeps the highest objective (lowest
// restart index on ties).
DiscoveryReport train_restarts(const Dataset& ds, const TrainConfig& cfg, const RunControl* control = nullptr);

struct MultiDiscovery {
  std::vector<DiscoveryReport> reports;
  std::vector<std::string> warnings;
};

// Repeated discovery, removing the rows covered by each found rule.
MultiDiscovery discover_multiple(const Dataset& ds, const TrainConfig& cfg, std::size_t count,
                                 const RunControl* control = nullptr);

// Minimum row count for another multi-subgroup iteration.
inline constexpr std::size_t kMinRowsForDiscovery = 50;

}  // namespace diffsub
