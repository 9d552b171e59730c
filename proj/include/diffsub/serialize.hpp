#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "diffsub/data.hpp"
#include "diffsub/densities.hpp"
#include "diffsub/eval.hpp"
#include "diffsub/objective.hpp"
#include "diffsub/rules.hpp"
#include "diffsub/synthgen.hpp"
#include "diffsub/trainer.hpp"

namespace diffsub {

using Json = nlohmann::ordered_json;

// Enum spellings used in JSON and on the command line.
const char* direction_name(Direction d);
Direction parse_direction(const std::string& name);
const char* kl_normalization_name(KlNormalization k);
KlNormalization parse_kl_normalization(const std::string& name);
const char* covariate_normalization_name(CovariateNormalization c);
CovariateNormalization parse_covariate_normalization(const std::string& name);

// Config readers start from `base` and overwrite only the keys present.
// Unknown keys and wrongly typed values raise InvalidConfig.
Json to_json(const ObjectiveConfig& cfg);
ObjectiveConfig objective_config_from_json(const Json& j, ObjectiveConfig base = {});
Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
Json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const Json& j, SynthConfig base = {});
Json to_json(const BenchmarkGrid& grid);
BenchmarkGrid benchmark_grid_from_json(const Json& j, BenchmarkGrid base = {});

Json to_json(const std::vector<ColumnSchema>& schema);
std::vector<ColumnSchema> schema_from_json(const Json& j);

Json to_json(const SoftRule& rule);
SoftRule soft_rule_from_json(const Json& j);
// Conditions in original units, keyed by encoded feature name.
Json rule_to_json(const HardRule& rule, const Dataset& ds);

Json to_json(const TargetDensity& p);
Json to_json(const TraceRecord& r);
Json to_json(const DiscoveryReport& report, const Dataset& ds);
Json to_json(const RecoveryMetrics& m);
Json to_json(const EffectMetrics& m);
Json to_json(const SynthTruth& truth, const Dataset& ds);

// A rule read back from report JSON: conditions by feature name in
// original units.
struct NamedCondition {
  std::string feature;
  double lo = 0.0;
  double hi = 0.0;
};
std::vector<NamedCondition> named_conditions_from_report(const Json& report);
// Membership of every row of ds under named conditions, compared in
// original units. Unknown feature names raise SchemaMismatch.
std::vector<int> apply_named_rule(const std::vector<NamedCondition>& rule, const Dataset& ds);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace diffsub
