#include "diffsub/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffsub/error.hpp"

namespace diffsub {

namespace {

double clamp_logit(double z) { return std::clamp(z, -kLogitClamp, kLogitClamp); }

// Exponentials of the two logits; zero derivative weight where clamped.
struct PredicateTerms {
  double eu;  // exp(-(x - a)/t)
  double ev;  // exp(-(b - x)/t)
  bool u_free;
  bool v_free;
};

PredicateTerms predicate_terms(double x, double a, double b, double t) {
  const double u = -(x - a) / t;
  const double v = -(b - x) / t;
  return {std::exp(clamp_logit(u)), std::exp(clamp_logit(v)), std::abs(u) < kLogitClamp,
          std::abs(v) < kLogitClamp};
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorKind::NonPositiveTemperature, "temperature must be positive, got " + format_number(t));
  }
}

bool HardRule::contains(std::span<const double> x) const {
  for (const auto& c : conditions) {
    if (!(c.lo < x[c.feature] && x[c.feature] < c.hi)) return false;
  }
  return true;
}

std::vector<int> HardRule::membership(const Dataset& ds) const {
  for (const auto& c : conditions) {
    if (c.feature >= ds.dims()) throw Error(ErrorKind::IndexOutOfRange, "rule feature out of range");
  }
  std::vector<int> out(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) out[i] = contains(ds.row(i)) ? 1 : 0;
  return out;
}

std::vector<DecodedCondition> HardRule::decode(const Dataset& ds) const {
  std::vector<DecodedCondition> out;
  for (const auto& c : conditions) out.push_back(decode_interval(ds, c.feature, c.lo, c.hi));
  return out;
}

std::string HardRule::describe(const Dataset& ds) const {
  if (conditions.empty()) return "(all)";
  std::string text;
  for (const auto& dc : decode(ds)) {
    if (!text.empty()) text += " & ";
    text += dc.text;
  }
  return text;
}

double SoftRule::total_weight() const {
  double w = 0.0;
  for (std::size_t j = 0; j < dims(); ++j) w += weight(j);
  return w;
}

double soft_predicate(double x, double a, double b, double t) {
  check_temperature(t);
  const auto p = predicate_terms(x, a, b, t);
  return 1.0 / (1.0 + p.eu + p.ev);
}

double soft_membership(const SoftRule& rule, std::span<const double> x) {
  check_temperature(rule.t);
  if (x.size() != rule.dims()) throw Error(ErrorKind::DimensionMismatch, "rule and row dimensions differ");
  double total = 0.0;
  double inverse = 0.0;
  for (std::size_t j = 0; j < rule.dims(); ++j) {
    const double w = rule.weight(j);
    if (w <= 0.0) continue;
    const auto p = predicate_terms(x[j], rule.a[j], rule.b[j], rule.t);
    total += w;
    inverse += w * (1.0 + p.eu + p.ev);
  }
  if (total <= 0.0) throw Error(ErrorKind::AllWeightsZero, "soft rule has no positive weight");
  return total / inverse;
}

MembershipBatch membership_batch(const SoftRule& rule, const Dataset& ds) {
  check_temperature(rule.t);
  const std::size_t n = ds.rows();
  const std::size_t d = ds.dims();
  if (rule.dims() != d || rule.b.size() != d || rule.rho.size() != d) {
    throw Error(ErrorKind::DimensionMismatch, "rule has " + std::to_string(rule.dims()) +
                                                  " features, dataset has " + std::to_string(d));
  }
  const double total = rule.total_weight();
  if (total <= 0.0) throw Error(ErrorKind::AllWeightsZero, "soft rule has no positive weight");

  MembershipBatch mb;
  mb.n = n;
  mb.d = d;
  mb.m.assign(n, 0.0);
  mb.dm_da.assign(n * d, 0.0);
  mb.dm_db.assign(n * d, 0.0);
  mb.dm_drho.assign(n * d, 0.0);

  const double t = rule.t;
  std::vector<PredicateTerms> terms(d);
  std::vector<double> denom(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ds.row(i);
    double inverse = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = rule.weight(j);
      if (w <= 0.0) continue;
      terms[j] = predicate_terms(x[j], rule.a[j], rule.b[j], t);
      denom[j] = 1.0 + terms[j].eu + terms[j].ev;
      inverse += w * denom[j];
    }
    const double s = total / inverse;
    mb.m[i] = s;
    // s = W / sum_j w_j D_j with D_j = 1/pi_j:
    //   ds/da_j  = -(s^2/W) w_j e^{u_j} / t
    //   ds/db_j  =  (s^2/W) w_j e^{v_j} / t
    //   ds/dw_j  =  (s/W) (1 - s D_j)
    const double s2w = s * s / total;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = rule.weight(j);
      if (w <= 0.0) continue;
      const std::size_t k = i * d + j;
      if (terms[j].u_free) mb.dm_da[k] = -s2w * w * terms[j].eu / t;
      if (terms[j].v_free) mb.dm_db[k] = s2w * w * terms[j].ev / t;
      mb.dm_drho[k] = (s / total) * (1.0 - s * denom[j]);
    }
  }
  return mb;
}

std::vector<double> memberships(const SoftRule& rule, const Dataset& ds) {
  if (rule.dims() != ds.dims()) throw Error(ErrorKind::DimensionMismatch, "rule and dataset dimensions differ");
  std::vector<double> m(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) m[i] = soft_membership(rule, ds.row(i));
  return m;
}

HardRule harden(const SoftRule& rule, double weight_eps, double vacuous_margin, const Dataset& ds) {
  if (rule.dims() != ds.dims()) throw Error(ErrorKind::DimensionMismatch, "rule and dataset dimensions differ");
  HardRule out;
  const std::size_t n = ds.rows();
  for (std::size_t j = 0; j < rule.dims(); ++j) {
    if (!(rule.weight(j) > weight_eps)) continue;
    const double a = rule.a[j];
    const double b = rule.b[j];
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ds.feature(i, j);
      if (!(a < x && x < b)) ++excluded;
    }
    if (static_cast<double>(excluded) < vacuous_margin * static_cast<double>(n)) continue;

    const auto& fi = ds.feature_info()[j];
    Condition c{j, a, b};
    if (c.lo < fi.observed_min) c.lo = std::nextafter(fi.observed_min, -std::numeric_limits<double>::infinity());
    if (c.hi > fi.observed_max) c.hi = std::nextafter(fi.observed_max, std::numeric_limits<double>::infinity());
    if (!(c.lo < c.hi)) {
      // Inverted interval: keep it empty but well formed.
      c.hi = std::nextafter(c.lo, std::numeric_limits<double>::infinity());
    }
    out.conditions.push_back(c);
  }
  return out;
}

SoftRule initial_rule(const Dataset& ds, double temperature, Rng& rng) {
  check_temperature(temperature);
  const std::size_t d = ds.dims();
  SoftRule rule;
  rule.t = temperature;
  rule.a.resize(d);
  rule.b.resize(d);
  rule.rho.assign(d, 0.5);
  std::vector<double> column(ds.rows());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < ds.rows(); ++i) column[i] = ds.feature(i, j);
    const auto& fi = ds.feature_info()[j];
    const double range = fi.observed_max - fi.observed_min;
    rule.a[j] = percentile(column, 0.15) + rng.uniform(-0.02, 0.02) * range;
    rule.b[j] = percentile(column, 0.85) + rng.uniform(-0.02, 0.02) * range;
  }
  return rule;
}

}  // namespace diffsub
