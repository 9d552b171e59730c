#include "diffsub/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diffsub/error.hpp"
#include "diffsub/parallel.hpp"

namespace diffsub {

namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;
};

// Split score to maximize: sum_c nL_c^2/nL + sum_c nR_c^2/nR for gini and
// sumL^2/nL + sumR^2/nR for squared error; both equal a constant minus the
// weighted child impurity.
class SplitSearch {
 public:
  SplitSearch(const TrainingMatrix& data, ForestTask task) : data_(data), task_(task) {}

  Split best(std::span<const std::size_t> idx, std::span<const std::size_t> features) {
    Split best;
    for (std::size_t f : features) scan(idx, f, best);
    return best;
  }

 private:
  void scan(std::span<const std::size_t> idx, std::size_t f, Split& best) {
    const std::size_t n = idx.size();
    order_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      order_[k] = {data_.x[idx[k] * data_.cols + f], data_.y[idx[k]]};
    }
    std::sort(order_.begin(), order_.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    if (task_ == ForestTask::Classify) {
      const std::size_t k_classes = data_.n_classes;
      left_.assign(k_classes, 0.0);
      right_.assign(k_classes, 0.0);
      for (const auto& [x, y] : order_) right_[static_cast<std::size_t>(y)] += 1.0;
      double sq_left = 0.0;
      double sq_right = 0.0;
      for (double c : right_) sq_right += c * c;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const auto cls = static_cast<std::size_t>(order_[k].second);
        sq_left += 2.0 * left_[cls] + 1.0;
        left_[cls] += 1.0;
        sq_right -= 2.0 * right_[cls] - 1.0;
        right_[cls] -= 1.0;
        if (order_[k].first == order_[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(n - k - 1);
        consider(sq_left / nl + sq_right / nr, f, k, best);
      }
    } else {
      double sum_right = 0.0;
      for (const auto& [x, y] : order_) sum_right += y;
      double sum_left = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        sum_left += order_[k].second;
        sum_right -= order_[k].second;
        if (order_[k].first == order_[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(n - k - 1);
        consider(sum_left * sum_left / nl + sum_right * sum_right / nr, f, k, best);
      }
    }
  }

  // Features arrive in ascending order and thresholds ascend within a
  // feature, so strict improvement keeps the lowest (feature, threshold).
  void consider(double score, std::size_t f, std::size_t k, Split& best) {
    if (best.found && !(score > best.score)) return;
    double thr = 0.5 * (order_[k].first + order_[k + 1].first);
    if (thr >= order_[k + 1].first) thr = order_[k].first;
    best = {true, f, thr, score};
  }

  const TrainingMatrix& data_;
  ForestTask task_;
  std::vector<std::pair<double, double>> order_;
  std::vector<double> left_;
  std::vector<double> right_;
};

bool node_is_pure(const TrainingMatrix& data, std::span<const std::size_t> idx) {
  const double first = data.y[idx[0]];
  return std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return data.y[i] == first; });
}

bool feature_is_constant(const TrainingMatrix& data, std::span<const std::size_t> idx, std::size_t f) {
  const double first = data.x[idx[0] * data.cols + f];
  return std::all_of(idx.begin(), idx.end(),
                     [&](std::size_t i) { return data.x[i * data.cols + f] == first; });
}

}  // namespace

TrainingMatrix forest_inputs(const Dataset& ds) {
  TrainingMatrix m;
  m.rows = ds.rows();
  m.cols = ds.dims() + 1;
  m.x.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto r = ds.row(i);
    std::copy(r.begin(), r.end(), m.x.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
    m.x[i * m.cols + ds.dims()] = ds.attribute()[i];
  }
  m.y = ds.target();
  m.n_classes = ds.target_kind() == TargetKind::Discrete ? ds.n_classes() : 0;
  return m;
}

DecisionTree DecisionTree::grow(const TrainingMatrix& data, ForestTask task,
                                std::span<const std::size_t> sample, std::size_t max_features,
                                std::size_t min_samples_split, Rng& rng) {
  DecisionTree tree;
  tree.outputs_ = task == ForestTask::Classify ? data.n_classes : 1;
  std::vector<std::size_t> idx(sample.begin(), sample.end());
  SplitSearch search(data, task);
  std::vector<std::size_t> perm(data.cols);
  std::vector<std::size_t> chosen;

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Pending> stack;
  tree.nodes_.emplace_back();
  stack.push_back({0, 0, idx.size()});

  auto make_leaf = [&](std::size_t node, std::span<const std::size_t> members) {
    tree.nodes_[node].feature = -1;
    tree.nodes_[node].payload = static_cast<std::uint32_t>(tree.payload_.size());
    if (task == ForestTask::Classify) {
      std::vector<double> counts(data.n_classes, 0.0);
      for (std::size_t i : members) counts[static_cast<std::size_t>(data.y[i])] += 1.0;
      for (double c : counts) tree.payload_.push_back(c / static_cast<double>(members.size()));
    } else {
      double sum = 0.0;
      for (std::size_t i : members) sum += data.y[i];
      tree.payload_.push_back(sum / static_cast<double>(members.size()));
    }
  };

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    std::span<std::size_t> members(idx.data() + job.begin, job.end - job.begin);
    if (members.size() < min_samples_split || node_is_pure(data, members)) {
      make_leaf(job.node, members);
      continue;
    }

    // Draw features in random order until max_features non-constant ones
    // are found, then evaluate them in ascending index order.
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    chosen.clear();
    for (std::size_t k = 0; k < perm.size() && chosen.size() < max_features; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(perm.size() - k));
      std::swap(perm[k], perm[pick]);
      if (!feature_is_constant(data, members, perm[k])) chosen.push_back(perm[k]);
    }
    if (chosen.empty()) {
      make_leaf(job.node, members);
      continue;
    }
    std::sort(chosen.begin(), chosen.end());
    const Split split = search.best(members, chosen);
    if (!split.found) {
      make_leaf(job.node, members);
      continue;
    }

    const auto mid = std::stable_partition(members.begin(), members.end(), [&](std::size_t i) {
      return data.x[i * data.cols + split.feature] <= split.threshold;
    });
    const std::size_t cut = job.begin + static_cast<std::size_t>(mid - members.begin());

    const auto left = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    const auto right = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    auto& node = tree.nodes_[job.node];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, cut, job.end});
    stack.push_back({left, job.begin, cut});
  }
  return tree;
}

std::span<const double> DecisionTree::leaf(std::span<const double> input) const {
  std::size_t k = 0;
  while (nodes_[k].feature >= 0) {
    const auto& node = nodes_[k];
    k = input[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return {payload_.data() + nodes_[k].payload, outputs_};
}

void ForestModel::predict_row(std::span<const double> input, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& tree : trees_) {
    const auto p = tree.leaf(input);
    for (std::size_t k = 0; k < n_outputs_; ++k) out[k] += p[k];
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (auto& v : out) v *= inv;
}

std::vector<double> ForestModel::predict(std::span<const double> x, std::size_t rows) const {
  if (x.size() != rows * n_inputs_) throw Error(ErrorKind::DimensionMismatch, "prediction input has wrong shape");
  std::vector<double> out(rows * n_outputs_);
  parallel_for(rows, [&](std::size_t i) {
    predict_row(x.subspan(i * n_inputs_, n_inputs_), std::span<double>(out).subspan(i * n_outputs_, n_outputs_));
  });
  return out;
}

std::vector<double> ForestModel::predict(const Dataset& ds) const {
  if (ds.dims() + 1 != n_inputs_) throw Error(ErrorKind::DimensionMismatch, "dataset does not match forest inputs");
  const auto inputs = forest_inputs(ds);
  return predict(inputs.x, inputs.rows);
}

ForestModel ForestModel::fit(const TrainingMatrix& data, ForestTask task, std::uint64_t seed,
                             const ForestOptions& options) {
  if (data.rows < 2) throw Error(ErrorKind::InsufficientData, "forest needs at least 2 rows");
  if (options.n_trees == 0) throw Error(ErrorKind::InvalidConfig, "forest needs at least one tree");
  if (task == ForestTask::Classify && data.n_classes < 1) {
    throw Error(ErrorKind::TaskMismatch, "classification forest needs a discrete target");
  }
  ForestModel model;
  model.task_ = task;
  model.n_inputs_ = data.cols;
  model.n_outputs_ = task == ForestTask::Classify ? data.n_classes : 1;
  model.seed_ = seed;

  std::size_t max_features = options.max_features;
  if (max_features == 0) {
    const double p = static_cast<double>(data.cols);
    max_features = static_cast<std::size_t>(
        task == ForestTask::Classify ? std::ceil(std::sqrt(p)) : std::ceil(p / 3.0));
  }
  max_features = std::clamp<std::size_t>(max_features, 1, data.cols);

  model.trees_.resize(options.n_trees);
  parallel_for(options.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> sample(data.rows);
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(data.rows));
    model.trees_[t] = DecisionTree::grow(data, task, sample, max_features, options.min_samples_split, rng);
  });
  return model;
}

ForestModel fit_forest(const Dataset& ds, ForestTask task, std::uint64_t seed, const ForestOptions& options) {
  if (task == ForestTask::Classify && ds.target_kind() != TargetKind::Discrete) {
    throw Error(ErrorKind::TaskMismatch, "classification forest needs a discrete target");
  }
  return ForestModel::fit(forest_inputs(ds), task, seed, options);
}

std::vector<double> local_divergence_discrete(std::span<const double> local_probs, std::size_t n_classes,
                                              std::span<const int> attribute, const WeightedPmf& pmf0,
                                              const WeightedPmf& pmf1) {
  if (local_probs.size() != attribute.size() * n_classes) {
    throw Error(ErrorKind::DimensionMismatch, "local class probabilities have wrong shape");
  }
  if (pmf0.probs.size() != n_classes || pmf1.probs.size() != n_classes) {
    throw Error(ErrorKind::DimensionMismatch, "subgroup PMFs do not match the class count");
  }
  std::vector<double> c(attribute.size(), 0.0);
  for (std::size_t i = 0; i < attribute.size(); ++i) {
    const auto& pmf = attribute[i] == 1 ? pmf1 : pmf0;
    double kl = 0.0;
    for (std::size_t l = 0; l < n_classes; ++l) {
      const double q = local_probs[i * n_classes + l];
      if (q > 0.0) kl += q * std::log(q / std::max(pmf.probs[l], kDensityFloor));
    }
    c[i] = std::max(kl, 0.0);
  }
  return c;
}

std::vector<double> local_divergence_discrete(const ForestModel& model, const Dataset& ds,
                                              const WeightedPmf& pmf0, const WeightedPmf& pmf1) {
  if (model.task() != ForestTask::Classify) {
    throw Error(ErrorKind::TaskMismatch, "discrete local divergence needs a classification forest");
  }
  const auto probs = model.predict(ds);
  return local_divergence_discrete(probs, model.n_outputs(), ds.attribute(), pmf0, pmf1);
}

std::vector<double> local_divergence_continuous(std::span<const double> predictions,
                                                std::span<const int> attribute, double mu0, double mu1) {
  if (predictions.size() != attribute.size()) {
    throw Error(ErrorKind::DimensionMismatch, "predictions and attribute differ in length");
  }
  std::vector<double> c(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double gap = predictions[i] - (attribute[i] == 1 ? mu1 : mu0);
    c[i] = gap * gap;
  }
  return c;
}

std::vector<double> local_divergence_continuous(const ForestModel& model, const Dataset& ds, double mu0,
                                                double mu1) {
  if (model.task() != ForestTask::Regress) {
    throw Error(ErrorKind::TaskMismatch, "continuous local divergence needs a regression forest");
  }
  const auto pred = model.predict(ds);
  return local_divergence_continuous(pred, ds.attribute(), mu0, mu1);
}

std::vector<double> permutation_importance(const ForestModel& model, const TrainingMatrix& data,
                                           std::uint64_t seed) {
  auto loss = [&](const std::vector<double>& x) {
    const auto pred = model.predict(x, data.rows);
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      if (model.task() == ForestTask::Regress) {
        const double e = pred[i] - data.y[i];
        total += e * e;
      } else {
        const auto row = std::span<const double>(pred).subspan(i * model.n_outputs(), model.n_outputs());
        const auto arg = static_cast<double>(std::max_element(row.begin(), row.end()) - row.begin());
        total += arg == data.y[i] ? 0.0 : 1.0;
      }
    }
    return total / static_cast<double>(data.rows);
  };
  const double base = loss(data.x);
  std::vector<double> out(data.cols);
  Rng rng(seed);
  for (std::size_t f = 0; f < data.cols; ++f) {
    std::vector<double> x = data.x;
    for (std::size_t i = data.rows - 1; i > 0; --i) {
      const auto k = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(x[i * data.cols + f], x[k * data.cols + f]);
    }
    out[f] = loss(x) - base;
  }
  return out;
}

}  // namespace diffsub
