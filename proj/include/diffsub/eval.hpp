#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/rules.hpp"
#include "diffsub/synthgen.hpp"
#include "diffsub/trainer.hpp"

namespace diffsub {

struct RecoveryMetrics {
  double f1 = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  // Set when the corresponding denominator was zero and the metric was
  // reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

RecoveryMetrics recovery(std::span<const int> predicted, std::span<const int> truth);

struct EffectMetrics {
  double tau_hat = 0.0;
  double pehe = 0.0;
  std::size_t n0_in = 0;
  std::size_t n1_in = 0;
};

// tau_hat inside the rule and its RMS error against the per-row true
// effects of the covered rows.
EffectMetrics effect_metrics(const Dataset& ds, const HardRule& rule);

struct BenchmarkGrid {
  std::vector<Setting> settings{Setting::Observational, Setting::Randomized, Setting::Demographic};
  std::vector<double> taus{1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::size_t replications = 10;
  SynthConfig synth;  // setting, tau and seed are overridden per cell
  TrainConfig train;  // seed overridden per cell
  std::uint64_t seed = 0;
  double cell_timeout_s = 600.0;
};

struct CellSeeds {
  std::uint64_t data = 0;
  std::uint64_t train = 0;
};

// Seeds depend on (setting, replicate) only, so every tau value of a
// replicate sees the same features, coefficients and box placement.
CellSeeds cell_seeds(std::uint64_t grid_seed, std::size_t setting_index, std::size_t replicate);

struct BenchmarkRow {
  Setting setting = Setting::Observational;
  double tau = 0.0;
  std::size_t replicate = 0;
  bool ok = false;
  std::string status;  // "ok" or the failure reason
  RecoveryMetrics recovery;
  bool has_effect = false;
  EffectMetrics effect;
  double runtime_s = 0.0;
};

// One cell: generate, discover (with restarts), score against the truth.
BenchmarkRow run_cell(const BenchmarkGrid& grid, std::size_t setting_index, double tau, std::size_t replicate);

// All cells, in (setting, tau, replicate) order. Cells may run in parallel.
std::vector<BenchmarkRow> benchmark(const BenchmarkGrid& grid);

// Columns: setting, tau, replicate, f1, accuracy, precision, recall,
// tau_hat, pehe, runtime_s, status. Missing values are empty fields.
std::string results_csv(const std::vector<BenchmarkRow>& rows, bool include_runtime = true);

// Per (setting, tau): successful cells, then mean and standard error of
// each metric.
std::string summary_csv(const std::vector<BenchmarkRow>& rows);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};
MeanSe mean_se(std::span<const double> values);

}  // namespace diffsub
