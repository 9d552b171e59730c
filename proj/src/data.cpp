#include "diffsub/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "diffsub/error.hpp"

namespace diffsub {

namespace {

const std::pair<ColumnKind, const char*> kKindNames[] = {
    {ColumnKind::Numeric, "numeric"},
    {ColumnKind::Categorical, "categorical"},
    {ColumnKind::Attribute, "binary-attribute"},
    {ColumnKind::TargetDiscrete, "target-discrete"},
    {ColumnKind::TargetContinuous, "target-continuous"},
    {ColumnKind::TruthMembership, "truth-membership"},
    {ColumnKind::TruthEffect, "truth-effect"},
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Comma split with RFC 4180 style double quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::string parse_error(std::size_t line, const std::string& column, const std::string& what) {
  return "line " + std::to_string(line) + ", column '" + column + "': " + what;
}

double parse_real(const std::string& text, std::size_t line, const std::string& column) {
  if (text.empty()) {
    throw Error(ErrorKind::ParseError, parse_error(line, column, "missing value"));
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError, parse_error(line, column, "not a finite number: '" + text + "'"));
  }
  return v;
}

int parse_binary(const std::string& text, std::size_t line, const std::string& column) {
  const double v = parse_real(text, line, column);
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorKind::ParseError, parse_error(line, column, "expected 0 or 1, got '" + text + "'"));
  }
  return static_cast<int>(v);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string exact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string column_kind_name(ColumnKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "numeric";
}

ColumnKind parse_column_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw Error(ErrorKind::SchemaMismatch, "unknown column kind '" + name + "'");
}

void validate_schema(const std::vector<ColumnSchema>& schema) {
  std::size_t attributes = 0;
  std::size_t targets = 0;
  std::set<std::string> names;
  for (const auto& col : schema) {
    if (!names.insert(col.name).second) {
      throw Error(ErrorKind::SchemaMismatch, "duplicate column '" + col.name + "' in schema");
    }
    switch (col.kind) {
      case ColumnKind::Attribute: ++attributes; break;
      case ColumnKind::TargetDiscrete:
      case ColumnKind::TargetContinuous: ++targets; break;
      case ColumnKind::Categorical: {
        std::set<std::string> levels(col.categories.begin(), col.categories.end());
        if (levels.size() != col.categories.size()) {
          throw Error(ErrorKind::SchemaMismatch, "duplicate category level in '" + col.name + "'");
        }
        break;
      }
      default: break;
    }
    if (col.kind != ColumnKind::Categorical && !col.categories.empty()) {
      throw Error(ErrorKind::SchemaMismatch, "categories given for non-categorical column '" + col.name + "'");
    }
  }
  if (attributes != 1) {
    throw Error(ErrorKind::SchemaMismatch, "schema needs exactly one binary-attribute column");
  }
  if (targets != 1) {
    throw Error(ErrorKind::SchemaMismatch, "schema needs exactly one target column");
  }
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Dataset Dataset::build(DatasetInput input) {
  const std::size_t n = input.attribute.size();
  if (input.target.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "target length differs from attribute length");
  }
  if (input.truth_membership && input.truth_membership->size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "truth membership length differs from row count");
  }
  if (input.truth_effect && input.truth_effect->size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "truth effect length differs from row count");
  }

  Dataset ds;
  for (const auto& col : input.features) {
    if (col.categorical) {
      if (col.codes.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "column '" + col.name + "' has wrong length");
      }
      if (col.categories.empty()) {
        throw Error(ErrorKind::SchemaMismatch, "categorical column '" + col.name + "' has no levels");
      }
      auto& indices = ds.encode_map_[col.name];
      for (const auto& level : col.categories) {
        FeatureInfo fi;
        fi.name = col.name + "=" + level;
        fi.source = col.name;
        fi.level = level;
        indices.push_back(ds.info_.size());
        ds.info_.push_back(fi);
      }
    } else {
      if (col.values.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "column '" + col.name + "' has wrong length");
      }
      FeatureInfo fi;
      fi.name = col.name;
      fi.source = col.name;
      if (input.scaling == Scaling::MinMax && n > 0) {
        const auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
        fi.scaling = Scaling::MinMax;
        fi.offset = *lo;
        if (*hi > *lo) fi.spread = *hi - *lo;
      } else if (input.scaling == Scaling::Standardize && n > 0) {
        double mean = 0.0;
        for (double v : col.values) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : col.values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        fi.scaling = Scaling::Standardize;
        fi.offset = mean;
        if (var > 0.0) fi.spread = std::sqrt(var);
      }
      ds.info_.push_back(fi);
    }
  }

  const std::size_t d = ds.info_.size();
  ds.x_.assign(n * d, 0.0);
  std::size_t j = 0;
  for (const auto& col : input.features) {
    if (col.categorical) {
      for (std::size_t i = 0; i < n; ++i) {
        if (col.codes[i] >= col.categories.size()) {
          throw Error(ErrorKind::IndexOutOfRange, "category code out of range in '" + col.name + "'");
        }
        ds.x_[i * d + j + col.codes[i]] = 1.0;
      }
      j += col.categories.size();
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(col.values[i])) {
          throw Error(ErrorKind::ParseError, "non-finite value in column '" + col.name + "'");
        }
        ds.x_[i * d + j] = ds.to_encoded(j, col.values[i]);
      }
      ++j;
    }
  }

  for (int a : input.attribute) {
    if (a != 0 && a != 1) throw Error(ErrorKind::ParseError, "attribute values must be 0 or 1");
  }
  for (double y : input.target) {
    if (!std::isfinite(y)) throw Error(ErrorKind::ParseError, "non-finite target value");
    if (input.target_kind == TargetKind::Discrete && (y < 0 || y != std::floor(y))) {
      throw Error(ErrorKind::ParseError, "discrete target values must be non-negative integers");
    }
  }
  if (input.truth_effect) {
    for (double v : *input.truth_effect) {
      if (!std::isfinite(v)) throw Error(ErrorKind::ParseError, "non-finite truth effect");
    }
  }

  ds.attribute_ = std::move(input.attribute);
  ds.target_ = std::move(input.target);
  ds.target_kind_ = input.target_kind;
  ds.attribute_name_ = input.attribute_name;
  ds.target_name_ = input.target_name;
  ds.truth_membership_ = std::move(input.truth_membership);
  ds.truth_effect_ = std::move(input.truth_effect);
  ds.row_ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.row_ids_[i] = i;
  ds.finalize();
  return ds;
}

void Dataset::finalize() {
  const std::size_t n = rows();
  const std::size_t d = dims();
  n1_ = static_cast<std::size_t>(std::count(attribute_.begin(), attribute_.end(), 1));
  n0_ = n - n1_;
  if (n0_ == 0 || n1_ == 0) {
    throw Error(ErrorKind::EmptyGroup, "population " + std::string(n0_ == 0 ? "0" : "1") +
                                           " has no rows; both groups need positive support");
  }
  n_classes_ = 0;
  if (target_kind_ == TargetKind::Discrete) {
    n_classes_ = static_cast<std::size_t>(*std::max_element(target_.begin(), target_.end())) + 1;
    n_classes_ = std::max<std::size_t>(n_classes_, 2);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, x_[i * d + j]);
      hi = std::max(hi, x_[i * d + j]);
    }
    info_[j].observed_min = lo;
    info_[j].observed_max = hi;
  }
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(info_.size());
  for (const auto& fi : info_) names.push_back(fi.name);
  return names;
}

const char* scaling_name(Scaling s) {
  switch (s) {
    case Scaling::None: return "none";
    case Scaling::MinMax: return "minmax";
    case Scaling::Standardize: return "standardize";
  }
  return "?";
}

Scaling parse_scaling(const std::string& name) {
  for (Scaling s : {Scaling::None, Scaling::MinMax, Scaling::Standardize}) {
    if (name == scaling_name(s)) return s;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown scaling '" + name + "'");
}

double Dataset::to_original(std::size_t j, double encoded) const {
  const auto& fi = info_.at(j);
  return fi.offset + encoded * fi.spread;
}

double Dataset::to_encoded(std::size_t j, double original) const {
  const auto& fi = info_.at(j);
  return (original - fi.offset) / fi.spread;
}

std::optional<std::size_t> Dataset::find_feature(const std::string& name) const {
  for (std::size_t j = 0; j < info_.size(); ++j) {
    if (info_[j].name == name) return j;
  }
  return std::nullopt;
}

Dataset Dataset::subset(std::span<const std::size_t> keep) const {
  Dataset out;
  const std::size_t d = dims();
  out.info_ = info_;
  out.encode_map_ = encode_map_;
  out.target_kind_ = target_kind_;
  out.attribute_name_ = attribute_name_;
  out.target_name_ = target_name_;
  out.x_.reserve(keep.size() * d);
  for (std::size_t i : keep) {
    if (i >= rows()) throw Error(ErrorKind::IndexOutOfRange, "subset row out of range");
    const auto r = row(i);
    out.x_.insert(out.x_.end(), r.begin(), r.end());
    out.attribute_.push_back(attribute_[i]);
    out.target_.push_back(target_[i]);
    out.row_ids_.push_back(row_ids_[i]);
  }
  if (truth_membership_) {
    std::vector<int> tm;
    for (std::size_t i : keep) tm.push_back((*truth_membership_)[i]);
    out.truth_membership_ = std::move(tm);
  }
  if (truth_effect_) {
    std::vector<double> te;
    for (std::size_t i : keep) te.push_back((*truth_effect_)[i]);
    out.truth_effect_ = std::move(te);
  }
  out.finalize();
  // Keep the parent's class count so PMFs stay aligned across subsets.
  out.n_classes_ = std::max(out.n_classes_, n_classes_);
  return out;
}

Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema,
                 const LoadOptions& options) {
  validate_schema(schema);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open data file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaMismatch, "'" + path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!position.emplace(header[c], c).second) {
      throw Error(ErrorKind::SchemaMismatch, "duplicate header column '" + header[c] + "'");
    }
  }
  for (const auto& col : schema) {
    if (!position.count(col.name)) {
      throw Error(ErrorKind::SchemaMismatch, "column '" + col.name + "' missing from CSV header");
    }
  }
  if (header.size() != schema.size()) {
    for (const auto& h : header) {
      const bool known = std::any_of(schema.begin(), schema.end(),
                                     [&](const ColumnSchema& c) { return c.name == h; });
      if (!known) throw Error(ErrorKind::SchemaMismatch, "CSV column '" + h + "' not in schema");
    }
  }

  std::vector<std::vector<std::string>> cells(schema.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      cells[c].push_back(fields[position[schema[c].name]]);
    }
  }
  const std::size_t n = schema.empty() ? 0 : cells[0].size();

  DatasetInput input;
  input.scaling = options.scaling;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& col = schema[c];
    const auto& raw = cells[c];
    auto line_of = [](std::size_t i) { return i + 2; };
    switch (col.kind) {
      case ColumnKind::Numeric: {
        InputColumn ic;
        ic.name = col.name;
        for (std::size_t i = 0; i < n; ++i) ic.values.push_back(parse_real(raw[i], line_of(i), col.name));
        input.features.push_back(std::move(ic));
        break;
      }
      case ColumnKind::Categorical: {
        InputColumn ic;
        ic.name = col.name;
        ic.categorical = true;
        ic.categories = col.categories;
        if (ic.categories.empty()) {
          std::set<std::string> levels(raw.begin(), raw.end());
          ic.categories.assign(levels.begin(), levels.end());
        }
        for (std::size_t i = 0; i < n; ++i) {
          if (raw[i].empty()) {
            throw Error(ErrorKind::ParseError, parse_error(line_of(i), col.name, "missing value"));
          }
          const auto it = std::find(ic.categories.begin(), ic.categories.end(), raw[i]);
          if (it == ic.categories.end()) {
            throw Error(ErrorKind::ParseError, parse_error(line_of(i), col.name, "unknown level '" + raw[i] + "'"));
          }
          ic.codes.push_back(static_cast<std::size_t>(it - ic.categories.begin()));
        }
        input.features.push_back(std::move(ic));
        break;
      }
      case ColumnKind::Attribute:
        input.attribute_name = col.name;
        for (std::size_t i = 0; i < n; ++i) input.attribute.push_back(parse_binary(raw[i], line_of(i), col.name));
        break;
      case ColumnKind::TargetDiscrete:
      case ColumnKind::TargetContinuous:
        input.target_name = col.name;
        input.target_kind = col.kind == ColumnKind::TargetDiscrete ? TargetKind::Discrete : TargetKind::Continuous;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = parse_real(raw[i], line_of(i), col.name);
          if (input.target_kind == TargetKind::Discrete && (v < 0 || v != std::floor(v))) {
            throw Error(ErrorKind::ParseError, parse_error(line_of(i), col.name, "expected a class label 0..m"));
          }
          input.target.push_back(v);
        }
        break;
      case ColumnKind::TruthMembership: {
        std::vector<int> tm;
        for (std::size_t i = 0; i < n; ++i) tm.push_back(parse_binary(raw[i], line_of(i), col.name));
        input.truth_membership = std::move(tm);
        break;
      }
      case ColumnKind::TruthEffect: {
        std::vector<double> te;
        for (std::size_t i = 0; i < n; ++i) te.push_back(parse_real(raw[i], line_of(i), col.name));
        input.truth_effect = std::move(te);
        break;
      }
    }
  }
  return Dataset::build(std::move(input));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> group_slices(const Dataset& ds) {
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  out.first.reserve(ds.n0());
  out.second.reserve(ds.n1());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    (ds.attribute()[i] == 1 ? out.second : out.first).push_back(i);
  }
  return out;
}

DecodedCondition decode_interval(const Dataset& ds, std::size_t feature, double lo, double hi) {
  if (feature >= ds.dims()) {
    throw Error(ErrorKind::IndexOutOfRange, "feature index " + std::to_string(feature) + " out of range");
  }
  const auto& fi = ds.feature_info()[feature];
  DecodedCondition out;
  out.feature = feature;
  out.name = fi.name;
  if (fi.level) {
    const bool has_one = lo < 1.0 && 1.0 < hi;
    const bool has_zero = lo < 0.0 && 0.0 < hi;
    out.lo = lo;
    out.hi = hi;
    out.vacuous = has_one && has_zero;
    if (has_one && !has_zero) {
      out.text = fi.source + " = " + *fi.level;
    } else if (has_zero && !has_one) {
      out.text = fi.source + " ≠ " + *fi.level;
    } else if (out.vacuous) {
      out.text = fi.source + " = any";
    } else {
      out.text = fi.source + " ∈ ∅";
    }
    return out;
  }
  out.lo = ds.to_original(feature, lo);
  out.hi = ds.to_original(feature, hi);
  out.vacuous = lo <= fi.observed_min && hi >= fi.observed_max;
  out.text = fi.name + " ∈ (" + format_number(out.lo) + ", " + format_number(out.hi) + ")";
  return out;
}

std::vector<ColumnSchema> schema_for(const DatasetInput& input) {
  std::vector<ColumnSchema> schema;
  for (const auto& col : input.features) {
    ColumnSchema cs;
    cs.name = col.name;
    cs.kind = col.categorical ? ColumnKind::Categorical : ColumnKind::Numeric;
    if (col.categorical) cs.categories = col.categories;
    schema.push_back(cs);
  }
  schema.push_back({input.attribute_name, ColumnKind::Attribute, {}});
  schema.push_back({input.target_name,
                    input.target_kind == TargetKind::Discrete ? ColumnKind::TargetDiscrete
                                                              : ColumnKind::TargetContinuous,
                    {}});
  if (input.truth_membership) schema.push_back({"s_true", ColumnKind::TruthMembership, {}});
  if (input.truth_effect) schema.push_back({"tau_true", ColumnKind::TruthEffect, {}});
  return schema;
}

void write_csv(const std::string& path, const DatasetInput& input) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path + "'");
  const auto schema = schema_for(input);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    out << (c ? "," : "") << quote_if_needed(schema[c].name);
  }
  out << '\n';
  const std::size_t n = input.attribute.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& col : input.features) {
      if (col.categorical) {
        out << quote_if_needed(col.categories[col.codes[i]]) << ',';
      } else {
        out << exact_number(col.values[i]) << ',';
      }
    }
    out << input.attribute[i] << ',' << exact_number(input.target[i]);
    if (input.truth_membership) out << ',' << (*input.truth_membership)[i];
    if (input.truth_effect) out << ',' << exact_number((*input.truth_effect)[i]);
    out << '\n';
  }
}

}  // namespace diffsub
