#include "diffsub/objective.hpp"

#include <cmath>

#include "diffsub/error.hpp"

namespace diffsub {

namespace {

ForestTask task_for(const Dataset& ds) {
  return ds.target_kind() == TargetKind::Discrete ? ForestTask::Classify : ForestTask::Regress;
}

void split_by_group(const Dataset& ds, std::span<const double> values, std::vector<double>& v0,
                    std::vector<double>& v1) {
  v0.clear();
  v1.clear();
  v0.reserve(ds.n0());
  v1.reserve(ds.n1());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    (ds.attribute()[i] == 1 ? v1 : v0).push_back(values[i]);
  }
}

}  // namespace

void validate(const ObjectiveConfig& cfg) {
  if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) {
    throw Error(ErrorKind::InvalidConfig, "gamma must be finite and >= 0");
  }
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw Error(ErrorKind::InvalidConfig, "lambda must be finite and >= 0");
  }
}

GeneralityTerm generality(std::span<const double> m, const Dataset& ds, double gamma) {
  if (m.size() != ds.rows()) throw Error(ErrorKind::DimensionMismatch, "membership length differs from row count");
  const double n0 = static_cast<double>(ds.n0());
  const double n1 = static_cast<double>(ds.n1());
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) (ds.attribute()[i] == 1 ? s1 : s0) += m[i];

  GeneralityTerm g;
  g.mean0 = s0 / n0;
  g.mean1 = s1 / n1;
  g.value = std::pow(g.mean0 * g.mean1, 0.5 * gamma);
  g.grad.assign(m.size(), 0.0);
  if (gamma == 0.0) return g;
  const double k0 = 0.5 * gamma * g.value / (std::max(g.mean0, kGroupMeanFloor) * n0);
  const double k1 = 0.5 * gamma * g.value / (std::max(g.mean1, kGroupMeanFloor) * n1);
  for (std::size_t i = 0; i < m.size(); ++i) g.grad[i] = ds.attribute()[i] == 1 ? k1 : k0;
  return g;
}

CovariateModel::CovariateModel(const Dataset& ds, std::uint64_t seed, const ForestOptions& options)
    : forest_(fit_forest(ds, task_for(ds), seed, options)), predictions_(forest_.predict(ds)) {}

std::vector<double> CovariateModel::local_divergence(const Dataset& ds, const TargetDensity& p0,
                                                     const TargetDensity& p1) const {
  if (forest_.task() == ForestTask::Classify) {
    const auto* pmf0 = std::get_if<WeightedPmf>(&p0);
    const auto* pmf1 = std::get_if<WeightedPmf>(&p1);
    if (!pmf0 || !pmf1) throw Error(ErrorKind::TaskMismatch, "classification forest needs PMF estimators");
    return local_divergence_discrete(predictions_, forest_.n_outputs(), ds.attribute(), *pmf0, *pmf1);
  }
  return local_divergence_continuous(predictions_, ds.attribute(), target_mean(p0), target_mean(p1));
}

DensitySnapshot refit_densities(const Dataset& ds, std::span<const double> m,
                                const CovariateModel& covariate, std::size_t epoch) {
  if (m.size() != ds.rows()) throw Error(ErrorKind::DimensionMismatch, "membership length differs from row count");
  std::vector<double> y0, y1, m0, m1;
  split_by_group(ds, ds.target(), y0, y1);
  split_by_group(ds, m, m0, m1);

  DensitySnapshot snap;
  snap.fitted_epoch = epoch;
  if (ds.target_kind() == TargetKind::Discrete) {
    snap.p0 = fit_discrete(y0, m0, ds.n_classes());
    snap.p1 = fit_discrete(y1, m1, ds.n_classes());
  } else {
    snap.p0 = fit_kde(y0, m0);
    snap.p1 = fit_kde(y1, m1);
  }
  const auto r0 = log_density_ratio(snap.p0, snap.p1, y0);
  const auto r1 = log_density_ratio(snap.p1, snap.p0, y1);
  snap.log_ratio.resize(ds.rows());
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    snap.log_ratio[i] = ds.attribute()[i] == 1 ? r1[k1++] : r0[k0++];
  }
  snap.c = covariate.local_divergence(ds, snap.p0, snap.p1);
  return snap;
}

ExceptionalityTerm exceptionality(std::span<const double> m, const Dataset& ds,
                                  std::span<const double> log_ratio, KlNormalization norm) {
  if (m.size() != ds.rows() || log_ratio.size() != ds.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "exceptionality inputs have inconsistent row counts");
  }
  const auto& attr = ds.attribute();
  double sum_mr[2] = {0.0, 0.0};
  double denom[2] = {static_cast<double>(ds.n0()), static_cast<double>(ds.n1())};
  if (norm == KlNormalization::SubgroupWeight) denom[0] = denom[1] = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum_mr[attr[i]] += m[i] * log_ratio[i];
    if (norm == KlNormalization::SubgroupWeight) denom[attr[i]] += m[i];
  }
  for (double& v : denom) {
    if (!(v > 0.0)) throw Error(ErrorKind::ZeroTotalWeight, "a population has zero subgroup weight");
  }
  const double kl[2] = {sum_mr[0] / denom[0], sum_mr[1] / denom[1]};
  ExceptionalityTerm e;
  e.value = 0.5 * (kl[0] + kl[1]);
  e.grad.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int a = attr[i];
    e.grad[i] = norm == KlNormalization::GroupSize ? 0.5 * log_ratio[i] / denom[a]
                                                   : 0.5 * (log_ratio[i] - kl[a]) / denom[a];
  }
  return e;
}

ObjectiveState evaluate_objective(const MembershipBatch& mb, const Dataset& ds, const ObjectiveConfig& cfg,
                                  const DensitySnapshot& snapshot) {
  if (mb.n != ds.rows() || snapshot.log_ratio.size() != mb.n || snapshot.c.size() != mb.n) {
    throw Error(ErrorKind::DimensionMismatch, "objective inputs have inconsistent row counts");
  }
  const auto gen = generality(mb.m, ds, cfg.gamma);
  const auto exc = exceptionality(mb.m, ds, snapshot.log_ratio, cfg.kl_normalization);
  const double raw_e = exc.value;

  double cov = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < mb.n; ++i) {
    cov += snapshot.c[i] * mb.m[i];
    weight += mb.m[i];
  }
  double c_scale = 1.0;
  if (cfg.covariate_normalization == CovariateNormalization::Rows) {
    c_scale = 1.0 / static_cast<double>(mb.n);
  } else if (cfg.covariate_normalization == CovariateNormalization::SubgroupWeight) {
    if (!(weight > 0.0)) throw Error(ErrorKind::ZeroTotalWeight, "subgroup has zero total membership");
    c_scale = 1.0 / weight;
  }
  cov *= c_scale;
  // d(sum m c / sum m)/dm_i = (c_i - C) / sum m
  const double c_shift = cfg.covariate_normalization == CovariateNormalization::SubgroupWeight ? cov : 0.0;

  const double sign = cfg.direction == Direction::MaximizeDivergence ? 1.0 : -1.0;
  const double e_clamped = std::max(raw_e, 0.0);

  ObjectiveState st;
  st.generality = gen.value;
  st.exceptionality = e_clamped;
  st.exceptionality_raw = raw_e;
  st.covariate_dep = cov;
  st.loss = gen.value * sign * e_clamped - cfg.lambda * cov;

  const std::size_t d = mb.d;
  st.grad_a.assign(d, 0.0);
  st.grad_b.assign(d, 0.0);
  st.grad_rho.assign(d, 0.0);
  for (std::size_t i = 0; i < mb.n; ++i) {
    const double dl_dm = gen.grad[i] * sign * e_clamped + gen.value * sign * exc.grad[i] -
                         cfg.lambda * c_scale * (snapshot.c[i] - c_shift);
    if (dl_dm == 0.0) continue;
    const std::size_t base = i * d;
    for (std::size_t j = 0; j < d; ++j) {
      st.grad_a[j] += dl_dm * mb.dm_da[base + j];
      st.grad_b[j] += dl_dm * mb.dm_db[base + j];
      st.grad_rho[j] += dl_dm * mb.dm_drho[base + j];
    }
  }
  return st;
}

ObjectiveState loss_and_grad(const SoftRule& rule, const Dataset& ds, const ObjectiveConfig& cfg,
                             const DensitySnapshot& snapshot, std::size_t epoch, std::size_t refit_every) {
  if (refit_every == 0) throw Error(ErrorKind::InvalidConfig, "refit interval must be >= 1");
  if (epoch < snapshot.fitted_epoch || epoch - snapshot.fitted_epoch >= refit_every) {
    throw Error(ErrorKind::StaleDensities, "densities fitted at epoch " + std::to_string(snapshot.fitted_epoch) +
                                               " used at epoch " + std::to_string(epoch));
  }
  const auto mb = membership_batch(rule, ds);
  return evaluate_objective(mb, ds, cfg, snapshot);
}

}  // namespace diffsub
