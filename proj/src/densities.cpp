#include "diffsub/densities.hpp"

#include <algorithm>
#include <cmath>

#include "diffsub/error.hpp"
#include "diffsub/parallel.hpp"

namespace diffsub {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double checked_total(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw Error(ErrorKind::ZeroTotalWeight, "weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroTotalWeight, "membership weights sum to zero");
  return total;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double WeightedPmf::density(double label) const {
  const auto l = static_cast<std::size_t>(label);
  if (label < 0 || l >= probs.size()) return 0.0;
  return probs[l];
}

double WeightedPmf::mean() const {
  double mu = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) mu += static_cast<double>(l) * probs[l];
  return mu;
}

double WeightedKde::density(double y) const {
  const double inv_h = 1.0 / bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double z = (y - centers[i]) * inv_h;
    sum += weights[i] * std::exp(-0.5 * z * z);
  }
  return sum * kInvSqrt2Pi * inv_h;
}

bool is_fitted(const TargetDensity& p) { return !std::holds_alternative<std::monostate>(p); }

double evaluate(const TargetDensity& p, double y) {
  return std::visit(overloaded{
                        [](const std::monostate&) -> double {
                          throw Error(ErrorKind::UnfittedEstimator, "density estimator not fitted");
                        },
                        [y](const WeightedPmf& pmf) { return pmf.density(y); },
                        [y](const WeightedKde& kde) { return kde.density(y); },
                    },
                    p);
}

std::vector<double> evaluate_many(const TargetDensity& p, std::span<const double> ys) {
  if (!is_fitted(p)) throw Error(ErrorKind::UnfittedEstimator, "density estimator not fitted");
  std::vector<double> out(ys.size());
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (ys.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(ys.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = evaluate(p, ys[i]);
  });
  return out;
}

double target_mean(const TargetDensity& p) {
  return std::visit(overloaded{
                        [](const std::monostate&) -> double {
                          throw Error(ErrorKind::UnfittedEstimator, "density estimator not fitted");
                        },
                        [](const WeightedPmf& pmf) { return pmf.mean(); },
                        [](const WeightedKde& kde) { return kde.weighted_mean; },
                    },
                    p);
}

WeightedPmf fit_discrete(std::span<const double> labels, std::span<const double> weights,
                         std::size_t n_classes) {
  if (labels.size() != weights.size()) throw Error(ErrorKind::LengthMismatch, "labels and weights differ in length");
  if (n_classes == 0) throw Error(ErrorKind::InvalidConfig, "n_classes must be positive");
  const double total = checked_total(weights);
  WeightedPmf pmf;
  pmf.total_weight = total;
  pmf.probs.assign(n_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    if (y < 0 || y != std::floor(y) || static_cast<std::size_t>(y) >= n_classes) {
      throw Error(ErrorKind::IndexOutOfRange, "class label outside 0.." + std::to_string(n_classes - 1));
    }
    pmf.probs[static_cast<std::size_t>(y)] += weights[i];
  }
  double norm = 0.0;
  for (auto& p : pmf.probs) {
    p = p / total + kPmfFloor;
    norm += p;
  }
  for (auto& p : pmf.probs) p /= norm;
  return pmf;
}

WeightedKde fit_kde(std::span<const double> y, std::span<const double> weights) {
  if (y.size() != weights.size()) throw Error(ErrorKind::LengthMismatch, "targets and weights differ in length");
  const double total = checked_total(weights);
  WeightedKde kde;
  double sum_sq_w = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    kde.centers.push_back(y[i]);
    kde.weights.push_back(weights[i] / total);
    sum_sq_w += weights[i] * weights[i];
  }
  kde.n_eff = total * total / sum_sq_w;

  double mean = 0.0;
  for (std::size_t i = 0; i < kde.centers.size(); ++i) mean += kde.weights[i] * kde.centers[i];
  double var = 0.0;
  for (std::size_t i = 0; i < kde.centers.size(); ++i) {
    const double dev = kde.centers[i] - mean;
    var += kde.weights[i] * dev * dev;
  }
  kde.weighted_mean = mean;
  kde.weighted_std = std::sqrt(var);
  if (var < 1e-12) {
    kde.degenerate = true;
    kde.bandwidth = 1e-6 * (1.0 + std::abs(mean));
  } else {
    kde.bandwidth = std::pow(kde.n_eff, -0.2) * kde.weighted_std;
  }
  return kde;
}

std::vector<double> log_density_ratio(const TargetDensity& own, const TargetDensity& other,
                                      std::span<const double> ys) {
  const auto p_own = evaluate_many(own, ys);
  const auto p_other = evaluate_many(other, ys);
  std::vector<double> out(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double mix = std::max(0.5 * (p_own[i] + p_other[i]), kDensityFloor);
    out[i] = std::log(std::max(p_own[i], kDensityFloor) / mix);
  }
  return out;
}

JsCoefficients js_coefficients(const TargetDensity& p0, const TargetDensity& p1,
                               std::span<const double> y0, std::span<const double> y1) {
  if (!is_fitted(p0) || !is_fitted(p1)) {
    throw Error(ErrorKind::UnfittedEstimator, "both subgroup estimators must be fitted");
  }
  if (p0.index() != p1.index()) {
    throw Error(ErrorKind::UnfittedEstimator, "subgroup estimators are of different kinds");
  }
  auto side = [&](const TargetDensity& own, const TargetDensity& other, std::span<const double> ys) {
    auto coeff = log_density_ratio(own, other, ys);
    const double scale = ys.empty() ? 0.0 : 0.5 / static_cast<double>(ys.size());
    for (auto& c : coeff) c *= scale;
    return coeff;
  };
  return {side(p0, p1, y0), side(p1, p0, y1)};
}

JsEstimate js_divergence(const TargetDensity& p0, const TargetDensity& p1, GroupSample g0,
                         GroupSample g1) {
  if (g0.y.size() != g0.m.size() || g1.y.size() != g1.m.size()) {
    throw Error(ErrorKind::LengthMismatch, "targets and memberships differ in length");
  }
  JsEstimate est;
  est.coeff = js_coefficients(p0, p1, g0.y, g1.y);
  double raw = 0.0;
  for (std::size_t i = 0; i < g0.m.size(); ++i) raw += est.coeff.group0[i] * g0.m[i];
  for (std::size_t i = 0; i < g1.m.size(); ++i) raw += est.coeff.group1[i] * g1.m[i];
  est.raw = raw;
  est.value = std::max(raw, 0.0);
  return est;
}

double js_divergence_exact(const WeightedPmf& p, const WeightedPmf& q) {
  if (p.probs.size() != q.probs.size()) throw Error(ErrorKind::DimensionMismatch, "PMFs have different supports");
  double js = 0.0;
  for (std::size_t l = 0; l < p.probs.size(); ++l) {
    const double mix = 0.5 * (p.probs[l] + q.probs[l]);
    if (p.probs[l] > 0.0) js += 0.5 * p.probs[l] * std::log(p.probs[l] / mix);
    if (q.probs[l] > 0.0) js += 0.5 * q.probs[l] * std::log(q.probs[l] / mix);
  }
  return js;
}

}  // namespace diffsub
