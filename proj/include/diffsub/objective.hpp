#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/densities.hpp"
#include "diffsub/forest.hpp"
#include "diffsub/rules.hpp"

namespace diffsub {

enum class Direction { MaximizeDivergence, MinimizeDivergence };

// Denominator of each group's weighted KL term: the full group size n_a, or
// the group's membership sum.
enum class KlNormalization { GroupSize, SubgroupWeight };

// Denominator of C: 1 (plain sum), the row count n, or the total membership.
enum class CovariateNormalization { Sum, Rows, SubgroupWeight };

struct ObjectiveConfig {
  double gamma = 0.1;   // generality exponent
  double lambda = 0.5;  // covariate-dependence weight
  Direction direction = Direction::MaximizeDivergence;
  CovariateNormalization covariate_normalization = CovariateNormalization::Rows;
  KlNormalization kl_normalization = KlNormalization::GroupSize;
};

void validate(const ObjectiveConfig& cfg);

// Floor on the per-group mean membership inside the generality gradient.
inline constexpr double kGroupMeanFloor = 1e-8;

struct GeneralityTerm {
  double value = 1.0;
  double mean0 = 0.0;
  double mean1 = 0.0;
  std::vector<double> grad;  // dG/dm_i
};

// ((1/n0) sum_{a=0} m_i * (1/n1) sum_{a=1} m_i)^(gamma/2).
GeneralityTerm generality(std::span<const double> m, const Dataset& ds, double gamma);

// Conditional-outcome model for the covariate-dependence penalty. The
// forest is fit once; its in-sample predictions are cached.
class CovariateModel {
 public:
  CovariateModel(const Dataset& ds, std::uint64_t seed, const ForestOptions& options = {});

  const ForestModel& forest() const { return forest_; }
  const std::vector<double>& predictions() const { return predictions_; }

  // Local divergence per row against the current subgroup estimators.
  std::vector<double> local_divergence(const Dataset& ds, const TargetDensity& p0,
                                       const TargetDensity& p1) const;

 private:
  ForestModel forest_;
  std::vector<double> predictions_;
};

// Estimators fitted against one set of memberships. They are constants for
// the gradient: the log ratios and c_i only change at the next refit.
struct DensitySnapshot {
  TargetDensity p0;
  TargetDensity p1;
  std::vector<double> log_ratio;  // log(p_a(y_i) / mix(y_i)), row order
  std::vector<double> c;        // local divergence, row order
  std::size_t fitted_epoch = 0;
};

DensitySnapshot refit_densities(const Dataset& ds, std::span<const double> m,
                                const CovariateModel& covariate, std::size_t epoch);

struct ExceptionalityTerm {
  double value = 0.0;
  std::vector<double> grad;  // dE/dm_i
};

// E = 0.5 * sum_a (sum_{i in a} m_i r_i) / norm_a with norm_a = n_a or
// sum_{i in a} m_i.
ExceptionalityTerm exceptionality(std::span<const double> m, const Dataset& ds,
                                  std::span<const double> log_ratio, KlNormalization norm);

struct ObjectiveState {
  double generality = 0.0;
  double exceptionality = 0.0;      // clamped at 0
  double exceptionality_raw = 0.0;  // sample estimate before clamping
  double covariate_dep = 0.0;
  double loss = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
  std::vector<double> grad_rho;
};

// L = G * (+-E) - lambda * C and dL/d(a, b, rho) through the membership
// Jacobians. A clamped (negative) raw E still passes its gradient through.
ObjectiveState evaluate_objective(const MembershipBatch& mb, const Dataset& ds,
                                  const ObjectiveConfig& cfg, const DensitySnapshot& snapshot);

// Checks the snapshot age (StaleDensities when epoch - fitted_epoch >=
// refit_every) and evaluates the objective for the rule.
ObjectiveState loss_and_grad(const SoftRule& rule, const Dataset& ds, const ObjectiveConfig& cfg,
                             const DensitySnapshot& snapshot, std::size_t epoch,
                             std::size_t refit_every);

}  // namespace diffsub
