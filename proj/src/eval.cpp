#include "diffsub/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "diffsub/error.hpp"
#include "diffsub/parallel.hpp"

namespace diffsub {

namespace {

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RecoveryMetrics recovery(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
  }
  RecoveryMetrics r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++r.tp;
    else if (p) ++r.fp;
    else if (t) ++r.fn;
    else ++r.tn;
  }
  const auto tp = static_cast<double>(r.tp);
  const auto fp = static_cast<double>(r.fp);
  const auto fn = static_cast<double>(r.fn);
  const auto tn = static_cast<double>(r.tn);
  const double n = tp + fp + fn + tn;
  r.accuracy = n > 0 ? (tp + tn) / n : 0.0;
  r.precision_undefined = r.tp + r.fp == 0;
  r.recall_undefined = r.tp + r.fn == 0;
  r.f1_undefined = 2 * r.tp + r.fp + r.fn == 0;
  r.precision = r.precision_undefined ? 0.0 : tp / (tp + fp);
  r.recall = r.recall_undefined ? 0.0 : tp / (tp + fn);
  r.f1 = r.f1_undefined ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  return r;
}

EffectMetrics effect_metrics(const Dataset& ds, const HardRule& rule) {
  if (!ds.truth_effect()) throw Error(ErrorKind::MissingTruth, "dataset has no truth-effect column");
  const auto eff = subgroup_effect(ds, rule);
  const auto member = rule.membership(ds);
  const auto& truth = *ds.truth_effect();
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (!member[i]) continue;
    const double e = eff.tau_hat - truth[i];
    sq += e * e;
    ++count;
  }
  return {eff.tau_hat, std::sqrt(sq / static_cast<double>(count)), eff.n0, eff.n1};
}

CellSeeds cell_seeds(std::uint64_t grid_seed, std::size_t setting_index, std::size_t replicate) {
  const std::uint64_t key = setting_index * 100003ULL + replicate;
  return {derive_seed(grid_seed, 2 * key), derive_seed(grid_seed, 2 * key + 1)};
}

BenchmarkRow run_cell(const BenchmarkGrid& grid, std::size_t setting_index, double tau, std::size_t replicate) {
  BenchmarkRow row;
  row.setting = grid.settings.at(setting_index);
  row.tau = tau;
  row.replicate = replicate;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto seeds = cell_seeds(grid.seed, setting_index, replicate);
    SynthConfig sc = grid.synth;
    sc.setting = row.setting;
    sc.tau = tau;
    sc.seed = seeds.data;
    TrainConfig tc = grid.train;
    tc.seed = seeds.train;
    RunControl control;
    control.deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(grid.cell_timeout_s));

    const auto data = generate(sc);
    const auto report = train_restarts(data.dataset, tc, &control);
    const auto predicted = report.rule.membership(data.dataset);
    row.recovery = recovery(predicted, data.truth.membership);
    try {
      row.effect = effect_metrics(data.dataset, report.rule);
      row.has_effect = true;
    } catch (const Error&) {
      row.has_effect = false;
    }
    row.ok = true;
    row.status = "ok";
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = e.what();
  }
  row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<BenchmarkRow> benchmark(const BenchmarkGrid& grid) {
  if (grid.replications < 1) throw Error(ErrorKind::InvalidConfig, "replications must be >= 1");
  if (grid.settings.empty() || grid.taus.empty()) throw Error(ErrorKind::InvalidConfig, "empty benchmark grid");
  const std::size_t per_setting = grid.taus.size() * grid.replications;
  std::vector<BenchmarkRow> rows(grid.settings.size() * per_setting);
  parallel_for(rows.size(), [&](std::size_t k) {
    const std::size_t s = k / per_setting;
    const std::size_t t = (k % per_setting) / grid.replications;
    const std::size_t r = k % grid.replications;
    rows[k] = run_cell(grid, s, grid.taus[t], r);
  });
  return rows;
}

std::string results_csv(const std::vector<BenchmarkRow>& rows, bool include_runtime) {
  std::string out = "setting,tau,replicate,f1,accuracy,precision,recall,tau_hat,pehe";
  out += include_runtime ? ",runtime_s,status\n" : ",status\n";
  for (const auto& r : rows) {
    out += setting_name(r.setting) + "," + fixed(r.tau) + "," + std::to_string(r.replicate) + ",";
    if (r.ok) {
      out += fixed(r.recovery.f1) + "," + fixed(r.recovery.accuracy) + "," + fixed(r.recovery.precision) + "," +
             fixed(r.recovery.recall) + ",";
    } else {
      out += ",,,,";
    }
    if (r.ok && r.has_effect) {
      out += fixed(r.effect.tau_hat) + "," + fixed(r.effect.pehe);
    } else {
      out += ",";
    }
    if (include_runtime) out += "," + fixed(r.runtime_s);
    std::string status = r.status;
    for (auto& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    out += "," + status + "\n";
  }
  return out;
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - m.mean) * (v - m.mean);
    const double sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
    m.se = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return m;
}

std::string summary_csv(const std::vector<BenchmarkRow>& rows) {
  std::map<std::pair<int, double>, std::vector<const BenchmarkRow*>> cells;
  for (const auto& r : rows) cells[{static_cast<int>(r.setting), r.tau}].push_back(&r);
  std::string out =
      "setting,tau,n_ok,f1_mean,f1_se,accuracy_mean,accuracy_se,precision_mean,precision_se,recall_mean,"
      "recall_se,pehe_mean,pehe_se\n";
  for (const auto& [key, members] : cells) {
    std::vector<double> f1, acc, prec, rec, pehe;
    for (const auto* r : members) {
      if (!r->ok) continue;
      f1.push_back(r->recovery.f1);
      acc.push_back(r->recovery.accuracy);
      prec.push_back(r->recovery.precision);
      rec.push_back(r->recovery.recall);
      if (r->has_effect) pehe.push_back(r->effect.pehe);
    }
    out += setting_name(static_cast<Setting>(key.first)) + "," + fixed(key.second) + "," + std::to_string(f1.size());
    for (const auto* v : {&f1, &acc, &prec, &rec, &pehe}) {
      const auto ms = mean_se(*v);
      out += "," + (ms.count ? fixed(ms.mean) : std::string()) + "," + (ms.count ? fixed(ms.se) : std::string());
    }
    out += "\n";
  }
  return out;
}

}  // namespace diffsub
