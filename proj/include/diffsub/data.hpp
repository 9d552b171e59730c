#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace diffsub {

enum class ColumnKind {
  Numeric,
  Categorical,
  Attribute,
  TargetDiscrete,
  TargetContinuous,
  TruthMembership,
  TruthEffect,
};

std::string column_kind_name(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& name);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  // Ordered level list, categorical columns only. Left empty, the levels are
  // taken from the data in sorted order.
  std::vector<std::string> categories;
};

// Throws SchemaMismatch unless there is exactly one attribute column, one
// target column, unique names and unique category levels.
void validate_schema(const std::vector<ColumnSchema>& schema);

enum class TargetKind { Discrete, Continuous };

// Affine map applied to numeric feature columns before rule learning.
// MinMax maps to [0, 1]; Standardize to zero mean and unit variance.
enum class Scaling { None, MinMax, Standardize };

const char* scaling_name(Scaling s);
Scaling parse_scaling(const std::string& name);

// One encoded feature column.
struct FeatureInfo {
  std::string name;    // "age" or "race=black"
  std::string source;  // original column name
  std::optional<std::string> level;  // set for one-hot columns
  // encoded = (original - offset) / spread
  Scaling scaling = Scaling::None;
  double offset = 0.0;
  double spread = 1.0;
  double observed_min = 0.0;  // encoded units
  double observed_max = 0.0;
};

// Column-oriented input for assembling a Dataset in memory.
struct InputColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> values;             // numeric columns
  std::vector<std::string> categories;    // categorical columns
  std::vector<std::size_t> codes;         // categorical columns, index into categories
};

struct DatasetInput {
  std::vector<InputColumn> features;
  std::vector<int> attribute;
  std::vector<double> target;
  TargetKind target_kind = TargetKind::Continuous;
  std::string attribute_name = "a";
  std::string target_name = "y";
  std::optional<std::vector<int>> truth_membership;
  std::optional<std::vector<double>> truth_effect;
  Scaling scaling = Scaling::Standardize;
};

// Immutable, validated table: n x d encoded features (row major), binary
// attribute, target, and optional ground-truth columns.
class Dataset {
 public:
  static Dataset build(DatasetInput input);

  std::size_t rows() const { return attribute_.size(); }
  std::size_t dims() const { return info_.size(); }
  std::size_t n0() const { return n0_; }
  std::size_t n1() const { return n1_; }

  double feature(std::size_t i, std::size_t j) const { return x_[i * dims() + j]; }
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * dims(), dims()};
  }
  const std::vector<double>& features() const { return x_; }
  const std::vector<int>& attribute() const { return attribute_; }
  const std::vector<double>& target() const { return target_; }
  TargetKind target_kind() const { return target_kind_; }
  // Number of classes for discrete targets (max label + 1), 0 otherwise.
  std::size_t n_classes() const { return n_classes_; }

  const std::vector<FeatureInfo>& feature_info() const { return info_; }
  std::vector<std::string> feature_names() const;
  // Categorical source column -> its one-hot feature indices, level order.
  const std::map<std::string, std::vector<std::size_t>>& encode_map() const { return encode_map_; }
  const std::string& attribute_name() const { return attribute_name_; }
  const std::string& target_name() const { return target_name_; }

  const std::optional<std::vector<int>>& truth_membership() const { return truth_membership_; }
  const std::optional<std::vector<double>>& truth_effect() const { return truth_effect_; }
  // Row position in the dataset this one was derived from (identity for a
  // freshly built dataset).
  const std::vector<std::size_t>& row_ids() const { return row_ids_; }

  // Encoded <-> original units for feature j (identity when unscaled).
  double to_original(std::size_t j, double encoded) const;
  double to_encoded(std::size_t j, double original) const;
  std::optional<std::size_t> find_feature(const std::string& name) const;

  // Keeps the listed rows (in the given order) and the original scaling.
  // Throws EmptyGroup when a population disappears.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  Dataset() = default;
  void finalize();

  std::vector<double> x_;
  std::vector<int> attribute_;
  std::vector<double> target_;
  TargetKind target_kind_ = TargetKind::Continuous;
  std::size_t n_classes_ = 0;
  std::size_t n0_ = 0;
  std::size_t n1_ = 0;
  std::vector<FeatureInfo> info_;
  std::map<std::string, std::vector<std::size_t>> encode_map_;
  std::string attribute_name_;
  std::string target_name_;
  std::optional<std::vector<int>> truth_membership_;
  std::optional<std::vector<double>> truth_effect_;
  std::vector<std::size_t> row_ids_;
};

struct LoadOptions {
  Scaling scaling = Scaling::Standardize;
};

Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema,
                 const LoadOptions& options = {});

// Row indices of population 0 and population 1, in row order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> group_slices(const Dataset& ds);

struct DecodedCondition {
  std::size_t feature = 0;
  std::string name;
  double lo = 0.0;  // original units
  double hi = 0.0;
  bool vacuous = false;
  std::string text;
};

// Renders the encoded interval (lo, hi) on feature j in original units.
DecodedCondition decode_interval(const Dataset& ds, std::size_t feature, double lo, double hi);

// Compact decimal rendering used in rule text ("15", "0.25", "1e-07").
std::string format_number(double v);

}  // namespace diffsub

namespace diffsub {

// Writes the raw (unscaled) columns with a header row; values use
// round-trip precision so load_csv reproduces the input exactly.
void write_csv(const std::string& path, const DatasetInput& input);

// Schema matching write_csv's column layout.
std::vector<ColumnSchema> schema_for(const DatasetInput& input);

}  // namespace diffsub
