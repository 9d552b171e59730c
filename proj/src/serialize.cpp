#include "diffsub/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "diffsub/error.hpp"

namespace diffsub {

namespace {

// Reads the keys of one JSON object and rejects anything left unread.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(ErrorKind::InvalidConfig, where_ + " must be a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const Json& v = j_.at(key);
    const std::string what = where_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(ErrorKind::InvalidConfig, what + " must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw Error(ErrorKind::InvalidConfig, what + " must be a number");
      out = v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw Error(ErrorKind::InvalidConfig, what + " must be a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw Error(ErrorKind::InvalidConfig, what + " must be a string");
      out = v.get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  const Json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorKind::InvalidConfig, "unknown key '" + it.key() + "' in " + where_);
      }
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<double> number_array(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidConfig, what + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorKind::InvalidConfig, what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

const char* direction_name(Direction d) {
  return d == Direction::MaximizeDivergence ? "maximize-divergence" : "minimize-divergence";
}

Direction parse_direction(const std::string& name) {
  if (name == "maximize-divergence") return Direction::MaximizeDivergence;
  if (name == "minimize-divergence") return Direction::MinimizeDivergence;
  throw Error(ErrorKind::InvalidConfig, "unknown direction '" + name + "'");
}

const char* kl_normalization_name(KlNormalization k) {
  return k == KlNormalization::GroupSize ? "group-size" : "subgroup-weight";
}

KlNormalization parse_kl_normalization(const std::string& name) {
  if (name == "group-size") return KlNormalization::GroupSize;
  if (name == "subgroup-weight") return KlNormalization::SubgroupWeight;
  throw Error(ErrorKind::InvalidConfig, "unknown kl_normalization '" + name + "'");
}

const char* covariate_normalization_name(CovariateNormalization c) {
  switch (c) {
    case CovariateNormalization::Sum: return "sum";
    case CovariateNormalization::Rows: return "rows";
    case CovariateNormalization::SubgroupWeight: return "subgroup-weight";
  }
  return "?";
}

CovariateNormalization parse_covariate_normalization(const std::string& name) {
  if (name == "sum") return CovariateNormalization::Sum;
  if (name == "rows") return CovariateNormalization::Rows;
  if (name == "subgroup-weight") return CovariateNormalization::SubgroupWeight;
  throw Error(ErrorKind::InvalidConfig, "unknown covariate_normalization '" + name + "'");
}

Json to_json(const ObjectiveConfig& cfg) {
  Json j;
  j["gamma"] = cfg.gamma;
  j["lambda"] = cfg.lambda;
  j["direction"] = direction_name(cfg.direction);
  j["kl_normalization"] = kl_normalization_name(cfg.kl_normalization);
  j["covariate_normalization"] = covariate_normalization_name(cfg.covariate_normalization);
  return j;
}

ObjectiveConfig objective_config_from_json(const Json& j, ObjectiveConfig base) {
  Fields f(j, "objective");
  f.get("gamma", base.gamma);
  f.get("lambda", base.lambda);
  std::string s;
  if (f.has("direction")) {
    f.get("direction", s);
    base.direction = parse_direction(s);
  }
  if (f.has("kl_normalization")) {
    f.get("kl_normalization", s);
    base.kl_normalization = parse_kl_normalization(s);
  }
  if (f.has("covariate_normalization")) {
    f.get("covariate_normalization", s);
    base.covariate_normalization = parse_covariate_normalization(s);
  }
  f.finish();
  validate(base);
  return base;
}

Json to_json(const TrainConfig& cfg) {
  Json j;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["temp_start"] = cfg.temp_start;
  j["temp_end"] = cfg.temp_end;
  j["refit_every"] = cfg.refit_every;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["restarts"] = cfg.restarts;
  j["seed"] = cfg.seed;
  j["weight_eps"] = cfg.weight_eps;
  j["vacuous_margin"] = cfg.vacuous_margin;
  j["forest_trees"] = cfg.forest_trees;
  j["warmup_fraction"] = cfg.warmup_fraction;
  j["objective"] = to_json(cfg.objective);
  return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig base) {
  Fields f(j, "train");
  f.get("epochs", base.epochs);
  f.get("lr", base.lr);
  f.get("temp_start", base.temp_start);
  f.get("temp_end", base.temp_end);
  f.get("refit_every", base.refit_every);
  f.get("beta1", base.beta1);
  f.get("beta2", base.beta2);
  f.get("adam_eps", base.adam_eps);
  f.get("restarts", base.restarts);
  f.get("seed", base.seed);
  f.get("weight_eps", base.weight_eps);
  f.get("vacuous_margin", base.vacuous_margin);
  f.get("forest_trees", base.forest_trees);
  f.get("warmup_fraction", base.warmup_fraction);
  if (const Json* o = f.take("objective")) base.objective = objective_config_from_json(*o, base.objective);
  f.finish();
  validate(base);
  return base;
}

Json to_json(const SynthConfig& cfg) {
  Json j;
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["setting"] = setting_name(cfg.setting);
  j["tau"] = cfg.tau;
  j["eta"] = cfg.eta;
  j["sigma2"] = cfg.sigma2;
  j["target_coverage"] = cfg.target_coverage;
  j["mu_scale"] = cfg.mu_scale;
  j["subgroups"] = cfg.subgroups;
  j["irrelevant"] = cfg.irrelevant;
  j["seed"] = cfg.seed;
  return j;
}

SynthConfig synth_config_from_json(const Json& j, SynthConfig base) {
  Fields f(j, "synth");
  f.get("n", base.n);
  f.get("d", base.d);
  if (f.has("setting")) {
    std::string s;
    f.get("setting", s);
    base.setting = parse_setting(s);
  }
  f.get("tau", base.tau);
  f.get("eta", base.eta);
  f.get("sigma2", base.sigma2);
  f.get("target_coverage", base.target_coverage);
  f.get("mu_scale", base.mu_scale);
  f.get("subgroups", base.subgroups);
  f.get("irrelevant", base.irrelevant);
  f.get("seed", base.seed);
  f.finish();
  validate(base);
  return base;
}

Json to_json(const BenchmarkGrid& grid) {
  Json j;
  Json settings = Json::array();
  for (Setting s : grid.settings) settings.push_back(setting_name(s));
  j["settings"] = settings;
  j["taus"] = grid.taus;
  j["replications"] = grid.replications;
  j["seed"] = grid.seed;
  j["cell_timeout_s"] = grid.cell_timeout_s;
  j["synth"] = to_json(grid.synth);
  j["train"] = to_json(grid.train);
  return j;
}

BenchmarkGrid benchmark_grid_from_json(const Json& j, BenchmarkGrid base) {
  Fields f(j, "grid");
  if (const Json* s = f.take("settings")) {
    if (!s->is_array() || s->empty()) throw Error(ErrorKind::InvalidConfig, "grid.settings must be a non-empty array");
    base.settings.clear();
    for (const auto& v : *s) {
      if (!v.is_string()) throw Error(ErrorKind::InvalidConfig, "grid.settings must hold strings");
      base.settings.push_back(parse_setting(v.get<std::string>()));
    }
  }
  if (const Json* t = f.take("taus")) {
    base.taus = number_array(*t, "grid.taus");
    if (base.taus.empty()) throw Error(ErrorKind::InvalidConfig, "grid.taus must not be empty");
  }
  f.get("replications", base.replications);
  f.get("seed", base.seed);
  f.get("cell_timeout_s", base.cell_timeout_s);
  if (const Json* s = f.take("synth")) base.synth = synth_config_from_json(*s, base.synth);
  if (const Json* t = f.take("train")) base.train = train_config_from_json(*t, base.train);
  f.finish();
  if (base.replications < 1) throw Error(ErrorKind::InvalidConfig, "grid.replications must be >= 1");
  if (!(base.cell_timeout_s > 0.0)) throw Error(ErrorKind::InvalidConfig, "grid.cell_timeout_s must be > 0");
  return base;
}

Json to_json(const std::vector<ColumnSchema>& schema) {
  Json j = Json::array();
  for (const auto& c : schema) {
    Json col;
    col["name"] = c.name;
    col["kind"] = column_kind_name(c.kind);
    if (!c.categories.empty()) col["categories"] = c.categories;
    j.push_back(col);
  }
  return j;
}

std::vector<ColumnSchema> schema_from_json(const Json& j) {
  const Json* cols = &j;
  if (j.is_object() && j.contains("columns")) cols = &j.at("columns");
  if (!cols->is_array()) throw Error(ErrorKind::SchemaMismatch, "schema must be an array of columns");
  std::vector<ColumnSchema> schema;
  for (const auto& c : *cols) {
    if (!c.is_object() || !c.contains("name") || !c.contains("kind") || !c.at("name").is_string() ||
        !c.at("kind").is_string()) {
      throw Error(ErrorKind::SchemaMismatch, "schema column needs string 'name' and 'kind'");
    }
    ColumnSchema col;
    col.name = c.at("name").get<std::string>();
    col.kind = parse_column_kind(c.at("kind").get<std::string>());
    if (c.contains("categories")) {
      const auto& cats = c.at("categories");
      if (!cats.is_array()) throw Error(ErrorKind::SchemaMismatch, "categories must be an array");
      for (const auto& v : cats) {
        if (!v.is_string()) throw Error(ErrorKind::SchemaMismatch, "categories must hold strings");
        col.categories.push_back(v.get<std::string>());
      }
    }
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

Json to_json(const SoftRule& rule) {
  Json j;
  j["a"] = rule.a;
  j["b"] = rule.b;
  j["rho"] = rule.rho;
  j["t"] = rule.t;
  return j;
}

SoftRule soft_rule_from_json(const Json& j) {
  Fields f(j, "soft_rule");
  SoftRule r;
  if (const Json* v = f.take("a")) r.a = number_array(*v, "soft_rule.a");
  if (const Json* v = f.take("b")) r.b = number_array(*v, "soft_rule.b");
  if (const Json* v = f.take("rho")) r.rho = number_array(*v, "soft_rule.rho");
  f.get("t", r.t);
  f.finish();
  if (r.a.size() != r.b.size() || r.a.size() != r.rho.size()) {
    throw Error(ErrorKind::DimensionMismatch, "soft_rule arrays differ in length");
  }
  check_temperature(r.t);
  return r;
}

Json rule_to_json(const HardRule& rule, const Dataset& ds) {
  Json conds = Json::array();
  for (const auto& c : rule.decode(ds)) {
    Json jc;
    jc["feature"] = ds.feature_info()[c.feature].name;
    jc["lo"] = c.lo;
    jc["hi"] = c.hi;
    jc["vacuous"] = c.vacuous;
    jc["text"] = c.text;
    conds.push_back(jc);
  }
  Json j;
  j["text"] = rule.describe(ds);
  j["conditions"] = conds;
  return j;
}

Json to_json(const TargetDensity& p) {
  Json j;
  if (const auto* pmf = std::get_if<WeightedPmf>(&p)) {
    j["kind"] = "pmf";
    j["probs"] = pmf->probs;
    j["total_weight"] = pmf->total_weight;
    j["mean"] = pmf->mean();
  } else if (const auto* kde = std::get_if<WeightedKde>(&p)) {
    j["kind"] = "kde";
    j["bandwidth"] = kde->bandwidth;
    j["n_eff"] = kde->n_eff;
    j["weighted_mean"] = kde->weighted_mean;
    j["weighted_std"] = kde->weighted_std;
    j["degenerate"] = kde->degenerate;
    j["centers"] = kde->centers.size();
  } else {
    j["kind"] = "unfitted";
  }
  return j;
}

Json to_json(const TraceRecord& r) {
  Json j;
  j["epoch"] = r.epoch;
  j["t"] = r.t;
  j["G"] = r.generality;
  j["E"] = r.exceptionality;
  j["C"] = r.covariate_dep;
  j["loss"] = r.loss;
  j["fresh"] = r.fresh;
  return j;
}

Json to_json(const DiscoveryReport& report, const Dataset& ds) {
  Json j;
  j["rule"] = rule_to_json(report.rule, ds);
  j["coverage"] = {{"group0", report.coverage0}, {"group1", report.coverage1}};
  j["rows"] = report.rows;
  j["generality"] = report.generality;
  j["exceptionality"] = report.exceptionality;
  j["exceptionality_raw"] = report.exceptionality_raw;
  j["covariate_dependence"] = report.covariate_dep;
  j["objective"] = report.objective;
  j["best_epoch"] = report.best_epoch;
  if (report.effect) {
    j["effect"] = {{"tau_hat", report.effect->tau_hat},
                   {"mean0", report.effect->mean0},
                   {"mean1", report.effect->mean1},
                   {"n0", report.effect->n0},
                   {"n1", report.effect->n1}};
  } else {
    j["effect"] = nullptr;
    j["effect_note"] = report.effect_note;
  }
  j["densities"] = {{"group0", to_json(report.p0)}, {"group1", to_json(report.p1)}};
  j["soft_rule"] = to_json(report.soft_rule);
  j["seed"] = report.seed;
  j["restart"] = report.restart;
  j["config"] = to_json(report.config);
  Json names = Json::array();
  for (const auto& fi : ds.feature_info()) names.push_back(fi.name);
  j["features"] = names;
  return j;
}

Json to_json(const RecoveryMetrics& m) {
  Json j;
  j["f1"] = m.f1;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["precision_undefined"] = m.precision_undefined;
  j["recall_undefined"] = m.recall_undefined;
  j["f1_undefined"] = m.f1_undefined;
  return j;
}

Json to_json(const EffectMetrics& m) {
  Json j;
  j["tau_hat"] = m.tau_hat;
  j["pehe"] = m.pehe;
  j["n0_in"] = m.n0_in;
  j["n1_in"] = m.n1_in;
  return j;
}

Json to_json(const SynthTruth& truth, const Dataset& ds) {
  Json boxes = Json::array();
  for (const auto& b : truth.boxes) {
    Json conds = Json::array();
    for (std::size_t k = 0; k < b.features.size(); ++k) {
      conds.push_back({{"feature", ds.feature_info()[b.features[k]].name}, {"lo", b.lo[k]}, {"hi", b.hi[k]}});
    }
    boxes.push_back({{"conditions", conds}});
  }
  Json j;
  j["boxes"] = boxes;
  j["coverage"] = truth.coverage;
  j["placement_attempts"] = truth.placement_attempts;
  j["beta_y"] = truth.beta_y;
  j["beta_a"] = truth.beta_a;
  j["mu"] = truth.mu;
  return j;
}

std::vector<NamedCondition> named_conditions_from_report(const Json& report) {
  if (!report.is_object() || !report.contains("rule") || !report.at("rule").is_object() ||
      !report.at("rule").contains("conditions") || !report.at("rule").at("conditions").is_array()) {
    throw Error(ErrorKind::SchemaMismatch, "report has no rule.conditions array");
  }
  std::vector<NamedCondition> out;
  for (const auto& c : report.at("rule").at("conditions")) {
    if (!c.is_object() || !c.contains("feature") || !c.contains("lo") || !c.contains("hi") ||
        !c.at("feature").is_string() || !c.at("lo").is_number() || !c.at("hi").is_number()) {
      throw Error(ErrorKind::SchemaMismatch, "rule condition needs feature, lo and hi");
    }
    out.push_back({c.at("feature").get<std::string>(), c.at("lo").get<double>(), c.at("hi").get<double>()});
  }
  return out;
}

std::vector<int> apply_named_rule(const std::vector<NamedCondition>& rule, const Dataset& ds) {
  std::vector<std::size_t> index;
  for (const auto& c : rule) {
    const auto j = ds.find_feature(c.feature);
    if (!j) throw Error(ErrorKind::SchemaMismatch, "rule feature '" + c.feature + "' not in data");
    index.push_back(*j);
  }
  std::vector<int> member(ds.rows(), 1);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double x = ds.to_original(index[k], ds.feature(i, index[k]));
      if (!(x > rule[k].lo && x < rule[k].hi)) {
        member[i] = 0;
        break;
      }
    }
  }
  return member;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::NotFound, "write failed for '" + path + "'");
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace diffsub
