#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace diffsub {

// Probability floor added to every class before renormalizing.
inline constexpr double kPmfFloor = 1e-9;
// Floor applied to density values before taking logs.
inline constexpr double kDensityFloor = 1e-12;

// Membership-weighted class frequencies of a discrete target.
struct WeightedPmf {
  std::vector<double> probs;
  double total_weight = 0.0;

  double density(double label) const;
  double mean() const;
};

// Membership-weighted Gaussian KDE with Scott's bandwidth computed from the
// Kish effective sample size.
struct WeightedKde {
  std::vector<double> centers;
  std::vector<double> weights;  // normalized
  double bandwidth = 0.0;
  double n_eff = 0.0;
  double weighted_mean = 0.0;
  double weighted_std = 0.0;
  bool degenerate = false;  // weighted variance below 1e-12, fallback bandwidth

  double density(double y) const;
};

using TargetDensity = std::variant<std::monostate, WeightedPmf, WeightedKde>;

bool is_fitted(const TargetDensity& p);
double evaluate(const TargetDensity& p, double y);
// Density at each query point; parallel over queries.
std::vector<double> evaluate_many(const TargetDensity& p, std::span<const double> ys);
// Weighted mean of the target under the estimator.
double target_mean(const TargetDensity& p);

// labels must be integers in [0, n_classes).
WeightedPmf fit_discrete(std::span<const double> labels, std::span<const double> weights,
                         std::size_t n_classes);
WeightedKde fit_kde(std::span<const double> y, std::span<const double> weights);

struct GroupSample {
  std::span<const double> y;
  std::span<const double> m;
};

// log(p_own(y) / mix(y)) at each query, mix = (p_own + p_other)/2, with
// both densities floored before the log.
std::vector<double> log_density_ratio(const TargetDensity& own, const TargetDensity& other,
                                      std::span<const double> ys);

// Per-sample exceptionality coefficients: coeff_i = 0.5 * log(p_a(y_i) / mix(y_i)) / n_a,
// so that E = sum_i coeff_i * m_i with the densities held fixed.
struct JsCoefficients {
  std::vector<double> group0;
  std::vector<double> group1;
};

JsCoefficients js_coefficients(const TargetDensity& p0, const TargetDensity& p1,
                               std::span<const double> y0, std::span<const double> y1);

struct JsEstimate {
  double value = 0.0;  // max(raw, 0)
  double raw = 0.0;
  JsCoefficients coeff;  // dE/dm_i under fixed densities
};

// Sample approximation of the Jensen-Shannon divergence between the two
// subgroup target distributions, each KL term averaged over the full group.
JsEstimate js_divergence(const TargetDensity& p0, const TargetDensity& p1, GroupSample g0,
                         GroupSample g1);

// Class-sum JS divergence between two PMFs, in nats.
double js_divergence_exact(const WeightedPmf& p, const WeightedPmf& q);

}  // namespace diffsub
