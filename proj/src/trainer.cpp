#include "diffsub/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "diffsub/error.hpp"
#include "diffsub/parallel.hpp"

namespace diffsub {

namespace {

class Adam {
 public:
  Adam(const TrainConfig& cfg, std::size_t size)
      : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

  // Ascent step on params; grad indexes match params.
  void step(std::vector<double*>& params, const std::vector<double>& grad) {
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < grad.size(); ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
      const double mhat = m_[k] / c1;
      const double vhat = v_[k] / c2;
      *params[k] += cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t steps_ = 0;
};

bool finite_state(const ObjectiveState& st) {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return std::isfinite(st.loss) && ok(st.grad_a) && ok(st.grad_b) && ok(st.grad_rho);
}

void check_deadline(const RunControl* control) {
  if (control && control->deadline && std::chrono::steady_clock::now() > *control->deadline) {
    throw Error(ErrorKind::Timeout, "run exceeded its time budget");
  }
}

TraceRecord record(std::size_t epoch, double t, const ObjectiveState& st, bool fresh) {
  return {epoch, t, st.generality, st.exceptionality, st.covariate_dep, st.loss, fresh};
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) throw Error(ErrorKind::InvalidConfig, "lr must be > 0");
  if (!(cfg.temp_end > 0.0) || !(cfg.temp_start >= cfg.temp_end) || !std::isfinite(cfg.temp_start)) {
    throw Error(ErrorKind::InvalidConfig, "temperatures must satisfy temp_start >= temp_end > 0");
  }
  if (cfg.refit_every < 1) throw Error(ErrorKind::InvalidConfig, "refit_every must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.adam_eps > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "Adam needs 0 <= beta < 1 and eps > 0");
  }
  if (cfg.restarts < 1) throw Error(ErrorKind::InvalidConfig, "restarts must be >= 1");
  if (cfg.forest_trees < 1) throw Error(ErrorKind::InvalidConfig, "forest_trees must be >= 1");
  if (!(cfg.weight_eps >= 0.0) || !(cfg.vacuous_margin >= 0.0 && cfg.vacuous_margin <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "extraction thresholds out of range");
  }
  if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "warmup_fraction must lie in [0, 1)");
  }
  validate(cfg.objective);
}

std::size_t warmup_epochs(const TrainConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.warmup_fraction * static_cast<double>(cfg.epochs)));
}

double temperature_at(const TrainConfig& cfg, std::size_t epoch) {
  const double step = (cfg.temp_start - cfg.temp_end) / static_cast<double>(cfg.epochs);
  if (epoch >= cfg.epochs) return cfg.temp_end;
  return cfg.temp_start - step * static_cast<double>(epoch);
}

SubgroupEffect subgroup_effect(const Dataset& ds, const HardRule& rule) {
  const auto member = rule.membership(ds);
  SubgroupEffect eff;
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (!member[i]) continue;
    if (ds.attribute()[i] == 1) {
      s1 += ds.target()[i];
      ++eff.n1;
    } else {
      s0 += ds.target()[i];
      ++eff.n0;
    }
  }
  if (eff.n0 == 0 || eff.n1 == 0) {
    throw Error(ErrorKind::EmptySubgroupInGroup,
                "rule covers no rows of population " + std::string(eff.n0 == 0 ? "0" : "1"));
  }
  eff.mean0 = s0 / static_cast<double>(eff.n0);
  eff.mean1 = s1 / static_cast<double>(eff.n1);
  eff.tau_hat = eff.mean1 - eff.mean0;
  return eff;
}

TrainResult train_once(const Dataset& ds, const TrainConfig& cfg, const RunControl* control) {
  validate(cfg);
  const std::size_t d = ds.dims();
  Rng rng(cfg.seed);
  SoftRule rule = initial_rule(ds, cfg.temp_start, rng);

  ForestOptions forest_options;
  forest_options.n_trees = cfg.forest_trees;
  const CovariateModel covariate(ds, derive_seed(cfg.seed, 1), forest_options);

  Adam adam(cfg, 3 * d);
  std::vector<double*> params;
  for (std::size_t j = 0; j < d; ++j) params.push_back(&rule.a[j]);
  for (std::size_t j = 0; j < d; ++j) params.push_back(&rule.b[j]);
  for (std::size_t j = 0; j < d; ++j) params.push_back(&rule.rho[j]);
  std::vector<double> grad(3 * d);

  DiscoveryReport report;
  report.config = cfg;
  report.seed = cfg.seed;
  report.rows = ds.rows();
  report.trace.reserve(cfg.epochs + 1);

  struct Best {
    bool set = false;
    SoftRule rule;
    ObjectiveState state;
    DensitySnapshot snapshot;
    std::size_t epoch = 0;
  } best;
  auto offer = [&](const SoftRule& r, const ObjectiveState& st, const DensitySnapshot& snap, std::size_t epoch) {
    if (best.set && !(st.loss > best.state.loss)) return;
    best = {true, r, st, snap, epoch};
  };
  auto ensure_finite = [&](const ObjectiveState& st, std::size_t epoch) {
    if (finite_state(st)) return;
    std::string dump;
    const std::size_t from = report.trace.size() > 5 ? report.trace.size() - 5 : 0;
    for (std::size_t k = from; k < report.trace.size(); ++k) {
      dump += " [epoch " + std::to_string(report.trace[k].epoch) + " loss " +
              format_number(report.trace[k].loss) + "]";
    }
    throw Error(ErrorKind::NonFiniteLoss, "non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                              "; last trace:" + dump);
  };

  const std::size_t warmup = warmup_epochs(cfg);
  ObjectiveConfig warm_objective = cfg.objective;
  warm_objective.kl_normalization = KlNormalization::SubgroupWeight;

  DensitySnapshot snapshot;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    check_deadline(control);
    rule.t = temperature_at(cfg, epoch);
    const auto mb = membership_batch(rule, ds);
    const bool fresh = epoch % cfg.refit_every == 0;
    if (fresh) snapshot = refit_densities(ds, mb.m, covariate, epoch);
    if (epoch - snapshot.fitted_epoch >= cfg.refit_every) {
      throw Error(ErrorKind::StaleDensities, "density refit skipped");
    }
    const bool warming = epoch < warmup;
    const auto st = evaluate_objective(mb, ds, warming ? warm_objective : cfg.objective, snapshot);
    ensure_finite(st, epoch);
    report.trace.push_back(record(epoch, rule.t, st, fresh));
    if (fresh && !warming) offer(rule, st, snapshot, epoch);

    for (std::size_t j = 0; j < d; ++j) {
      grad[j] = st.grad_a[j];
      grad[d + j] = st.grad_b[j];
      grad[2 * d + j] = st.grad_rho[j];
    }
    adam.step(params, grad);
    if (rule.total_weight() <= 0.0) {
      // Keep the conjunction defined: revive the largest weight parameter.
      const auto top = std::max_element(rule.rho.begin(), rule.rho.end());
      *top = 1e-6;
    }
  }

  // Final iterate at the end temperature with fresh densities.
  rule.t = temperature_at(cfg, cfg.epochs);
  {
    const auto mb = membership_batch(rule, ds);
    const auto snap = refit_densities(ds, mb.m, covariate, cfg.epochs);
    const auto st = evaluate_objective(mb, ds, cfg.objective, snap);
    ensure_finite(st, cfg.epochs);
    report.trace.push_back(record(cfg.epochs, rule.t, st, true));
    offer(rule, st, snap, cfg.epochs);
  }

  report.soft_rule = best.rule;
  report.best_epoch = best.epoch;
  report.generality = best.state.generality;
  report.exceptionality = best.state.exceptionality;
  report.exceptionality_raw = best.state.exceptionality_raw;
  report.covariate_dep = best.state.covariate_dep;
  report.objective = best.state.loss;
  report.p0 = best.snapshot.p0;
  report.p1 = best.snapshot.p1;

  report.rule = harden(best.rule, cfg.weight_eps, cfg.vacuous_margin, ds);
  report.conditions = report.rule.decode(ds);
  report.rule_text = report.rule.describe(ds);
  const auto member = report.rule.membership(ds);
  double c0 = 0.0;
  double c1 = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) (ds.attribute()[i] == 1 ? c1 : c0) += member[i];
  report.coverage0 = c0 / static_cast<double>(ds.n0());
  report.coverage1 = c1 / static_cast<double>(ds.n1());
  try {
    report.effect = subgroup_effect(ds, report.rule);
  } catch (const Error& e) {
    report.effect_note = e.what();
  }
  return {best.rule, std::move(report)};
}

DiscoveryReport train_restarts(const Dataset& ds, const TrainConfig& cfg, const RunControl* control) {
  validate(cfg);
  std::vector<std::optional<DiscoveryReport>> runs(cfg.restarts);
  parallel_for(cfg.restarts, [&](std::size_t r) {
    TrainConfig local = cfg;
    local.seed = cfg.seed + r;
    runs[r] = train_once(ds, local, control).report;
    runs[r]->restart = r;
    runs[r]->config = cfg;
  });
  std::size_t winner = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r]->objective > runs[winner]->objective) winner = r;
  }
  return std::move(*runs[winner]);
}

MultiDiscovery discover_multiple(const Dataset& ds, const TrainConfig& cfg, std::size_t count,
                                 const RunControl* control) {
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "subgroup count must be >= 1");
  MultiDiscovery out;
  std::optional<Dataset> current = ds;
  for (std::size_t k = 0; k < count; ++k) {
    if (current->rows() < kMinRowsForDiscovery) {
      out.warnings.push_back("stopped after " + std::to_string(k) + " subgroup(s): only " +
                             std::to_string(current->rows()) + " rows left");
      break;
    }
    TrainConfig local = cfg;
    local.seed = cfg.seed + k * cfg.restarts;
    out.reports.push_back(train_restarts(*current, local, control));
    if (k + 1 == count) break;

    const auto member = out.reports.back().rule.membership(*current);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < current->rows(); ++i) {
      if (!member[i]) keep.push_back(i);
    }
    try {
      current = current->subset(keep);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyGroup) throw;
      out.warnings.push_back("stopped after " + std::to_string(k + 1) +
                             " subgroup(s): a population has no rows left");
      break;
    }
  }
  return out;
}

}  // namespace diffsub
