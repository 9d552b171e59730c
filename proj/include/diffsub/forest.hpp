#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/densities.hpp"
#include "diffsub/random.hpp"

namespace diffsub {

enum class ForestTask { Classify, Regress };

struct ForestOptions {
  std::size_t n_trees = 100;
  std::size_t min_samples_split = 2;
  // Features tried per split; 0 selects ceil(sqrt(p)) for classification
  // and ceil(p/3) for regression.
  std::size_t max_features = 0;
};

// Row-major design matrix with its training target. For classification the
// target holds class labels 0..n_classes-1.
struct TrainingMatrix {
  std::vector<double> x;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> y;
  std::size_t n_classes = 0;
};

// Features with the attribute appended as the last column.
TrainingMatrix forest_inputs(const Dataset& ds);

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t payload = 0;  // offset into the payload array for leaves
  };

  static DecisionTree grow(const TrainingMatrix& data, ForestTask task,
                           std::span<const std::size_t> sample, std::size_t max_features,
                           std::size_t min_samples_split, Rng& rng);

  // Leaf payload: class proportions (classification) or mean (regression).
  std::span<const double> leaf(std::span<const double> input) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t outputs() const { return outputs_; }

 private:
  std::vector<Node> nodes_;
  std::vector<double> payload_;
  std::size_t outputs_ = 1;
};

// Bagged CART ensemble with unrestricted depth.
class ForestModel {
 public:
  ForestTask task() const { return task_; }
  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_inputs() const { return n_inputs_; }
  // Class count for classifiers, 1 for regressors.
  std::size_t n_outputs() const { return n_outputs_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Averages leaf payloads over trees in tree order.
  void predict_row(std::span<const double> input, std::span<double> out) const;
  // n x n_outputs row-major predictions.
  std::vector<double> predict(std::span<const double> x, std::size_t rows) const;
  // Predictions for every dataset row with its own attribute value.
  std::vector<double> predict(const Dataset& ds) const;

  static ForestModel fit(const TrainingMatrix& data, ForestTask task, std::uint64_t seed,
                         const ForestOptions& options = {});

 private:
  ForestTask task_ = ForestTask::Regress;
  std::size_t n_inputs_ = 0;
  std::size_t n_outputs_ = 1;
  std::uint64_t seed_ = 0;
  std::vector<DecisionTree> trees_;
};

// Models Y from (X, A): classifier for discrete targets, regressor otherwise.
ForestModel fit_forest(const Dataset& ds, ForestTask task, std::uint64_t seed,
                       const ForestOptions& options = {});

// Per-row KL(local class distribution || subgroup PMF of the row's group).
std::vector<double> local_divergence_discrete(std::span<const double> local_probs,
                                              std::size_t n_classes,
                                              std::span<const int> attribute,
                                              const WeightedPmf& pmf0, const WeightedPmf& pmf1);
std::vector<double> local_divergence_discrete(const ForestModel& model, const Dataset& ds,
                                              const WeightedPmf& pmf0, const WeightedPmf& pmf1);

// Per-row squared gap between the local mean and the group's subgroup mean.
std::vector<double> local_divergence_continuous(std::span<const double> predictions,
                                                std::span<const int> attribute, double mu0,
                                                double mu1);
std::vector<double> local_divergence_continuous(const ForestModel& model, const Dataset& ds,
                                                double mu0, double mu1);

// Increase in mean squared error (regression) or misclassification rate
// (classification) on the given data after permuting each column.
std::vector<double> permutation_importance(const ForestModel& model, const TrainingMatrix& data,
                                           std::uint64_t seed);

}  // namespace diffsub
