#include "diffsub/synthgen.hpp"

#include <cmath>
#include <numeric>

#include "diffsub/error.hpp"
#include "diffsub/random.hpp"

namespace diffsub {

namespace {

constexpr std::size_t kMaxPlacementAttempts = 100;
constexpr double kCoverageTolerance = 0.05;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Two distinct features; with two boxes, both share the first feature and
// take disjoint intervals on it.
std::vector<SynthBox> place_boxes(const SynthConfig& cfg, Rng& rng, std::size_t f0, std::size_t f1,
                                  std::size_t f2) {
  const double per_box = cfg.target_coverage / static_cast<double>(cfg.subgroups);
  const double width = std::sqrt(per_box);
  std::vector<SynthBox> boxes;
  if (cfg.subgroups == 1) {
    SynthBox box;
    for (std::size_t f : {f0, f1}) {
      const double lo = rng.uniform(0.0, 1.0 - width);
      box.features.push_back(f);
      box.lo.push_back(lo);
      box.hi.push_back(lo + width);
    }
    boxes.push_back(box);
    return boxes;
  }
  // Shared feature: two disjoint intervals of the same width.
  const double slack = 1.0 - 2.0 * width;
  const double first = rng.uniform(0.0, slack);
  const double second = rng.uniform(first + width, 1.0 - width);
  for (std::size_t k = 0; k < 2; ++k) {
    SynthBox box;
    const double lo = k == 0 ? first : second;
    box.features.push_back(f0);
    box.lo.push_back(lo);
    box.hi.push_back(lo + width);
    const std::size_t other = k == 0 ? f1 : f2;
    const double lo2 = rng.uniform(0.0, 1.0 - width);
    box.features.push_back(other);
    box.lo.push_back(lo2);
    box.hi.push_back(lo2 + width);
    boxes.push_back(box);
  }
  return boxes;
}

bool in_box(const SynthBox& box, const std::vector<double>& x, std::size_t d, std::size_t i) {
  for (std::size_t k = 0; k < box.features.size(); ++k) {
    const double v = x[i * d + box.features[k]];
    if (!(box.lo[k] < v && v < box.hi[k])) return false;
  }
  return true;
}

SynthData assemble(const SynthConfig& cfg, const std::vector<double>& x, std::vector<int> a,
                   std::vector<double> y, SynthTruth truth, std::vector<double> effect) {
  const std::size_t n = cfg.n;
  const std::size_t d = cfg.d;
  DatasetInput input;
  for (std::size_t j = 0; j < d; ++j) {
    InputColumn col;
    col.name = "x" + std::to_string(j);
    col.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) col.values[i] = x[i * d + j];
    input.features.push_back(std::move(col));
  }
  input.attribute = std::move(a);
  input.target = std::move(y);
  input.target_kind = TargetKind::Continuous;
  input.truth_membership = truth.membership;
  input.truth_effect = std::move(effect);
  input.scaling = Scaling::Standardize;
  Dataset ds = Dataset::build(input);
  return {std::move(input), std::move(ds), std::move(truth)};
}

}  // namespace

std::string setting_name(Setting s) {
  switch (s) {
    case Setting::Observational: return "observational";
    case Setting::Randomized: return "randomized";
    case Setting::Demographic: return "demographic";
    case Setting::FullMediation: return "full-mediation-control";
    case Setting::NullEffect: return "null-effect-control";
  }
  return "observational";
}

Setting parse_setting(const std::string& name) {
  for (Setting s : {Setting::Observational, Setting::Randomized, Setting::Demographic,
                    Setting::FullMediation, Setting::NullEffect}) {
    if (setting_name(s) == name) return s;
  }
  if (name == "interventional") return Setting::Randomized;
  throw Error(ErrorKind::InvalidConfig, "unknown setting '" + name + "'");
}

void validate(const SynthConfig& cfg) {
  if (cfg.n < 10) throw Error(ErrorKind::InvalidConfig, "n must be >= 10");
  if (cfg.d < 2) throw Error(ErrorKind::InvalidConfig, "d must be >= 2");
  if (!(cfg.target_coverage > 0.0 && cfg.target_coverage < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "target_coverage must lie in (0, 1)");
  }
  if (!(cfg.sigma2 >= 0.0) || !std::isfinite(cfg.sigma2)) throw Error(ErrorKind::InvalidConfig, "sigma2 must be >= 0");
  if (!std::isfinite(cfg.tau) || !std::isfinite(cfg.eta)) throw Error(ErrorKind::InvalidConfig, "effects must be finite");
  if (!(cfg.mu_scale >= 0.0)) throw Error(ErrorKind::InvalidConfig, "mu_scale must be >= 0");
  if (cfg.subgroups != 1 && cfg.subgroups != 2) throw Error(ErrorKind::InvalidConfig, "subgroups must be 1 or 2");
  if (cfg.irrelevant > cfg.d || cfg.d - cfg.irrelevant < 2) {
    throw Error(ErrorKind::InvalidConfig, "at least two features must be relevant");
  }
  if (cfg.subgroups == 2) {
    if (cfg.d - cfg.irrelevant < 3) throw Error(ErrorKind::InvalidConfig, "two planted boxes need d >= 3");
    if (cfg.target_coverage > 0.5) {
      throw Error(ErrorKind::InvalidConfig, "two disjoint boxes need target_coverage <= 0.5");
    }
  }
}

SynthData generate(const SynthConfig& cfg) {
  validate(cfg);
  if (cfg.setting == Setting::FullMediation) return generate_full_mediation(cfg);
  const std::size_t n = cfg.n;
  const std::size_t d = cfg.d;
  Rng rng(cfg.seed);

  SynthTruth truth;
  truth.beta_y.resize(d);
  truth.beta_a.resize(d);
  truth.mu.resize(d);
  for (auto& b : truth.beta_y) b = rng.uniform(-1.0, 1.0);
  for (auto& b : truth.beta_a) b = rng.uniform(-1.0, 1.0);
  for (auto& m : truth.mu) m = rng.uniform(-cfg.mu_scale, cfg.mu_scale);
  const std::size_t relevant = d - cfg.irrelevant;
  for (std::size_t j = relevant; j < d; ++j) truth.beta_y[j] = truth.beta_a[j] = truth.mu[j] = 0.0;

  // Subgroup features: a random ordering of the relevant columns, first two (three).
  std::vector<std::size_t> order(relevant);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k + 1 < relevant; ++k) {
    std::swap(order[k], order[k + static_cast<std::size_t>(rng.below(relevant - k))]);
  }

  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.uniform();
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.5;
    if (cfg.setting == Setting::Observational) {
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += truth.beta_a[j] * x[i * d + j];
      p = sigmoid(z);
    }
    a[i] = rng.bernoulli(p) ? 1 : 0;
  }
  if (cfg.setting == Setting::Demographic) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] != 1) continue;
      for (std::size_t j = 0; j < d; ++j) x[i * d + j] += truth.mu[j];
    }
  }

  const std::size_t f2 = d > 2 ? order[2] : order[0];
  for (std::size_t attempt = 1;; ++attempt) {
    truth.boxes = place_boxes(cfg, rng, order[0], order[1], f2);
    truth.membership.assign(n, 0);
    truth.box_membership.assign(truth.boxes.size(), std::vector<int>(n, 0));
    std::size_t covered = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < truth.boxes.size(); ++b) {
        if (in_box(truth.boxes[b], x, d, i)) {
          truth.box_membership[b][i] = 1;
          truth.membership[i] = 1;
        }
      }
      covered += static_cast<std::size_t>(truth.membership[i]);
    }
    truth.coverage = static_cast<double>(covered) / static_cast<double>(n);
    truth.placement_attempts = attempt;
    if (std::abs(truth.coverage - cfg.target_coverage) <= kCoverageTolerance) break;
    if (attempt == kMaxPlacementAttempts) {
      throw Error(ErrorKind::CoverageCalibrationFailure,
                  "no box placement reached coverage " + format_number(cfg.target_coverage) + " within " +
                      std::to_string(kMaxPlacementAttempts) + " attempts");
    }
  }

  const double tau = cfg.setting == Setting::NullEffect ? cfg.eta : cfg.tau;
  const double sigma = std::sqrt(cfg.sigma2);
  std::vector<double> y(n);
  std::vector<double> effect(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < d; ++j) f += truth.beta_y[j] * x[i * d + j];
    const double sign = a[i] == 1 ? 0.5 : -0.5;
    effect[i] = truth.membership[i] ? tau : cfg.eta;
    f += sign * effect[i];
    y[i] = f + sigma * rng.normal();
  }
  return assemble(cfg, x, std::move(a), std::move(y), std::move(truth), std::move(effect));
}

SynthData generate_full_mediation(const SynthConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n;
  const std::size_t d = cfg.d;
  Rng rng(cfg.seed);

  SynthTruth truth;
  truth.beta_y.resize(d);
  truth.mu.resize(d);
  for (auto& b : truth.beta_y) b = rng.uniform(-1.0, 1.0);
  for (auto& m : truth.mu) m = rng.uniform(-cfg.mu_scale, cfg.mu_scale);
  for (std::size_t j = d - cfg.irrelevant; j < d; ++j) truth.beta_y[j] = truth.mu[j] = 0.0;

  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.uniform();
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.bernoulli(0.5) ? 1 : 0;
    if (a[i] == 1) {
      for (std::size_t j = 0; j < d; ++j) x[i * d + j] += truth.mu[j];
    }
  }
  const double sigma = std::sqrt(cfg.sigma2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < d; ++j) f += truth.beta_y[j] * x[i * d + j];
    y[i] = f + sigma * rng.normal();
  }
  truth.membership.assign(n, 0);
  // No direct effect anywhere.
  return assemble(cfg, x, std::move(a), std::move(y), std::move(truth), std::vector<double>(n, 0.0));
}

HardRule box_rule(const SynthBox& box, const Dataset& ds) {
  HardRule rule;
  for (std::size_t k = 0; k < box.features.size(); ++k) {
    const std::size_t j = box.features[k];
    if (j >= ds.dims()) throw Error(ErrorKind::IndexOutOfRange, "box feature outside the dataset");
    rule.conditions.push_back({j, ds.to_encoded(j, box.lo[k]), ds.to_encoded(j, box.hi[k])});
  }
  return rule;
}

}  // namespace diffsub
