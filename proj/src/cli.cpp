#include "diffsub/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "diffsub/error.hpp"

namespace diffsub {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool is_validation(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::ParseError:
    case ErrorKind::EmptyGroup:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::InvalidConfig:
    case ErrorKind::NonPositiveTemperature:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::LengthMismatch:
    case ErrorKind::MissingTruth:
    case ErrorKind::TaskMismatch:
    case ErrorKind::InsufficientData:
      return true;
    default:
      return false;
  }
}

// Flag values; an option only overrides the config when it was given.
struct Flags {
  std::string config, data, schema, out, grid, report, truth, setting, scaling;
  std::uint64_t seed = 0;
  double lambda = 0, gamma = 0, lr = 0, tau = 0, eta = 0;
  std::size_t epochs = 0, refit_every = 0, restarts = 0, subgroups = 0, n = 0, d = 0, irrelevant = 0;
  bool min_divergence = false;
  int verbosity = 0;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* data = nullptr;
  CLI::Option* schema = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* grid = nullptr;
  CLI::Option* report = nullptr;
  CLI::Option* truth = nullptr;
  CLI::Option* setting = nullptr;
  CLI::Option* scaling = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* tau = nullptr;
  CLI::Option* eta = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* refit_every = nullptr;
  CLI::Option* restarts = nullptr;
  CLI::Option* subgroups = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* d = nullptr;
  CLI::Option* irrelevant = nullptr;
  CLI::Option* min_divergence = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

void add_common(CLI::App* sub, Flags& f, Options& o) {
  o.config = sub->add_option("--config", f.config, "JSON run config; flags override it");
  o.out = sub->add_option("--out", f.out, "output directory");
  o.seed = sub->add_option("--seed", f.seed, "base seed");
  sub->add_flag("-v,--verbose", f.verbosity, "progress notes on stderr");
}

void add_train(CLI::App* sub, Flags& f, Options& o) {
  o.lambda = sub->add_option("--lambda", f.lambda, "covariate-dependence weight");
  o.gamma = sub->add_option("--gamma", f.gamma, "generality exponent");
  o.epochs = sub->add_option("--epochs", f.epochs, "optimization epochs");
  o.lr = sub->add_option("--lr", f.lr, "Adam learning rate");
  o.refit_every = sub->add_option("--refit-every", f.refit_every, "epochs between density refits");
  o.restarts = sub->add_option("--restarts", f.restarts, "independent runs; best objective wins");
  o.min_divergence = sub->add_flag("--min-divergence", f.min_divergence, "search for agreement instead of divergence");
}

void add_synth(CLI::App* sub, Flags& f, Options& o) {
  o.setting = sub->add_option("--setting", f.setting, "observational | randomized | demographic | ...");
  o.tau = sub->add_option("--tau", f.tau, "effect inside the planted subgroup");
  o.eta = sub->add_option("--eta", f.eta, "effect outside the planted subgroup");
  o.n = sub->add_option("--n", f.n, "rows");
  o.d = sub->add_option("--d", f.d, "features");
  o.irrelevant = sub->add_option("--irrelevant", f.irrelevant, "trailing pure-noise features");
}

void apply_train_flags(TrainConfig& t, const Flags& f, const Options& o) {
  if (given(o.seed)) t.seed = f.seed;
  if (given(o.lambda)) t.objective.lambda = f.lambda;
  if (given(o.gamma)) t.objective.gamma = f.gamma;
  if (given(o.epochs)) t.epochs = f.epochs;
  if (given(o.lr)) t.lr = f.lr;
  if (given(o.refit_every)) t.refit_every = f.refit_every;
  if (given(o.restarts)) t.restarts = f.restarts;
  if (given(o.min_divergence) && f.min_divergence) t.objective.direction = Direction::MinimizeDivergence;
}

void apply_synth_flags(SynthConfig& s, const Flags& f, const Options& o) {
  if (given(o.setting)) s.setting = parse_setting(f.setting);
  if (given(o.tau)) s.tau = f.tau;
  if (given(o.eta)) s.eta = f.eta;
  if (given(o.n)) s.n = f.n;
  if (given(o.d)) s.d = f.d;
  if (given(o.irrelevant)) s.irrelevant = f.irrelevant;
}

RunConfig resolve(const std::string& command, const Flags& f, const Options& o) {
  RunConfig cfg;
  if (given(o.config)) cfg = run_config_from_json(read_json_file(f.config));
  if (!cfg.command.empty() && cfg.command != command) {
    throw Error(ErrorKind::InvalidConfig, "config was written for '" + cfg.command + "', not '" + command + "'");
  }
  cfg.command = command;
  if (given(o.data)) cfg.data = f.data;
  if (given(o.schema)) cfg.schema = f.schema;
  if (given(o.out)) cfg.out = f.out;
  if (given(o.report)) cfg.report = f.report;
  if (given(o.truth)) cfg.truth = f.truth;
  if (given(o.scaling)) cfg.scaling = parse_scaling(f.scaling);
  if (given(o.subgroups)) cfg.subgroups = f.subgroups;
  if (f.verbosity > 0) cfg.verbosity = f.verbosity;
  if (given(o.grid)) cfg.grid = benchmark_grid_from_json(read_json_file(f.grid), cfg.grid);

  if (command == "benchmark") {
    apply_train_flags(cfg.grid.train, f, o);
    apply_synth_flags(cfg.grid.synth, f, o);
    if (given(o.seed)) cfg.grid.seed = f.seed;
    if (given(o.setting)) cfg.grid.settings = {parse_setting(f.setting)};
    if (given(o.tau)) cfg.grid.taus = {f.tau};
    validate(cfg.grid.train);
    validate(cfg.grid.synth);
  } else {
    apply_train_flags(cfg.train, f, o);
    apply_synth_flags(cfg.synth, f, o);
    if (command == "simulate" && given(o.seed)) cfg.synth.seed = f.seed;
    if (command == "simulate" && given(o.subgroups)) cfg.synth.subgroups = f.subgroups;
    validate(cfg.train);
    validate(cfg.synth);
  }
  if (cfg.subgroups < 1) throw Error(ErrorKind::InvalidConfig, "--subgroups must be >= 1");
  return cfg;
}

void prepare_out(const RunConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorKind::InvalidConfig, "--out is required");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) {
    throw Error(ErrorKind::NotFound, "cannot create output directory '" + cfg.out + "'");
  }
}

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out) / name).string(); }

std::vector<ColumnSchema> load_schema(const std::string& schema_path, const std::string& data_path) {
  std::string path = schema_path;
  if (path.empty()) {
    const fs::path sibling = fs::path(data_path).parent_path() / "schema.json";
    if (!fs::exists(sibling)) {
      throw Error(ErrorKind::SchemaMismatch, "no --schema given and no schema.json next to '" + data_path + "'");
    }
    path = sibling.string();
  }
  return schema_from_json(read_json_file(path));
}

Dataset load_data(const std::string& data_path, const std::string& schema_path, Scaling scaling) {
  if (data_path.empty()) throw Error(ErrorKind::InvalidConfig, "--data is required");
  if (!fs::exists(data_path)) throw Error(ErrorKind::NotFound, "data file '" + data_path + "' not found");
  const auto schema = load_schema(schema_path, data_path);
  return load_csv(data_path, schema, LoadOptions{scaling});
}

std::string trace_jsonl(const std::vector<TraceRecord>& trace) {
  std::string text;
  for (const auto& r : trace) text += to_json(r).dump() + "\n";
  return text;
}

void summarize_report(const DiscoveryReport& r, std::ostream& out) {
  out << "rule: " << r.rule_text << "\n";
  out << "coverage: group0 " << fmt(r.coverage0) << ", group1 " << fmt(r.coverage1) << "\n";
  out << "G " << fmt(r.generality) << "  E " << fmt(r.exceptionality) << "  C " << fmt(r.covariate_dep)
      << "  objective " << fmt(r.objective, 6) << "  (epoch " << r.best_epoch << ")\n";
  if (r.effect) {
    out << "tau_hat: " << fmt(r.effect->tau_hat) << " (n0 " << r.effect->n0 << ", n1 " << r.effect->n1 << ")\n";
  } else {
    out << "tau_hat: n/a (" << r.effect_note << ")\n";
  }
}

void run_discover(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_data(cfg.data, cfg.schema, cfg.scaling);
  prepare_out(cfg);
  write_json_file(out_path(cfg, "config_echo.json"), to_json(cfg));
  if (cfg.verbosity > 0) err << "loaded " << ds.rows() << " rows, " << ds.dims() << " features\n";

  if (cfg.subgroups == 1) {
    const auto report = train_restarts(ds, cfg.train);
    write_json_file(out_path(cfg, "report.json"), to_json(report, ds));
    write_text_file(out_path(cfg, "trace.jsonl"), trace_jsonl(report.trace));
    summarize_report(report, out);
    return;
  }
  const auto multi = discover_multiple(ds, cfg.train, cfg.subgroups);
  for (const auto& w : multi.warnings) err << "warning: " << w << "\n";
  Json list = Json::array();
  for (const auto& r : multi.reports) list.push_back(to_json(r, ds));
  Json doc;
  doc["subgroups"] = list;
  doc["warnings"] = multi.warnings;
  write_json_file(out_path(cfg, "subgroups.json"), doc);
  if (!multi.reports.empty()) {
    write_json_file(out_path(cfg, "report.json"), to_json(multi.reports.front(), ds));
    std::string trace;
    for (std::size_t k = 0; k < multi.reports.size(); ++k) {
      for (const auto& r : multi.reports[k].trace) {
        Json line = to_json(r);
        line["subgroup"] = k;
        trace += line.dump() + "\n";
      }
    }
    write_text_file(out_path(cfg, "trace.jsonl"), trace);
  }
  for (std::size_t k = 0; k < multi.reports.size(); ++k) {
    out << "subgroup " << (k + 1) << "\n";
    summarize_report(multi.reports[k], out);
  }
}

void run_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto sim = generate(cfg.synth);
  prepare_out(cfg);
  write_json_file(out_path(cfg, "config_echo.json"), to_json(cfg));
  write_csv(out_path(cfg, "data.csv"), sim.input);
  write_json_file(out_path(cfg, "schema.json"), to_json(schema_for(sim.input)));
  write_json_file(out_path(cfg, "truth.json"), to_json(sim.truth, sim.dataset));
  out << "simulated " << sim.dataset.rows() << " rows, " << sim.dataset.dims() << " features ("
      << setting_name(cfg.synth.setting) << ", tau " << format_number(cfg.synth.tau) << ")\n";
  out << "planted coverage: " << fmt(sim.truth.coverage) << "\n";
  for (const auto& box : sim.truth.boxes) {
    std::string text;
    for (std::size_t k = 0; k < box.features.size(); ++k) {
      if (k) text += " & ";
      text += sim.dataset.feature_info()[box.features[k]].name + " ∈ (" + format_number(box.lo[k]) + ", " +
              format_number(box.hi[k]) + ")";
    }
    out << "planted rule: " << text << "\n";
  }
}

void run_benchmark(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  prepare_out(cfg);
  write_json_file(out_path(cfg, "config_echo.json"), to_json(cfg));
  if (cfg.verbosity > 0) {
    err << "running " << cfg.grid.settings.size() * cfg.grid.taus.size() * cfg.grid.replications << " cells\n";
  }
  const auto rows = benchmark(cfg.grid);
  write_text_file(out_path(cfg, "results.csv"), results_csv(rows, true));
  const std::string summary = summary_csv(rows);
  write_text_file(out_path(cfg, "summary.csv"), summary);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  out << summary;
  out << rows.size() << " cells, " << failed << " failed\n";
}

void run_evaluate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.report.empty()) throw Error(ErrorKind::InvalidConfig, "--report is required");
  if (cfg.truth.empty()) throw Error(ErrorKind::InvalidConfig, "--truth is required");
  const Json report = read_json_file(cfg.report);
  const auto rule = named_conditions_from_report(report);
  const Dataset ds = load_data(cfg.truth, cfg.schema, cfg.scaling);
  if (!ds.truth_membership()) throw Error(ErrorKind::MissingTruth, "truth file has no truth-membership column");
  RunConfig resolved = cfg;
  if (resolved.out.empty()) resolved.out = (fs::path(cfg.report).parent_path() / "evaluation").string();
  prepare_out(resolved);

  const auto member = apply_named_rule(rule, ds);
  const auto metrics = recovery(member, *ds.truth_membership());
  Json doc;
  doc["recovery"] = to_json(metrics);
  doc["rows"] = ds.rows();
  doc["covered"] = static_cast<std::size_t>(std::count(member.begin(), member.end(), 1));

  std::optional<EffectMetrics> effect;
  std::string note;
  if (ds.truth_effect()) {
    HardRule hard;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const std::size_t j = *ds.find_feature(rule[k].feature);
      hard.conditions.push_back({j, ds.to_encoded(j, rule[k].lo), ds.to_encoded(j, rule[k].hi)});
    }
    try {
      effect = effect_metrics(ds, hard);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptySubgroupInGroup) throw;
      note = e.what();
    }
  } else {
    note = "no truth-effect column";
  }
  if (effect) {
    doc["effect"] = to_json(*effect);
  } else {
    doc["effect"] = nullptr;
    doc["effect_note"] = note;
  }
  write_json_file(out_path(resolved, "metrics.json"), doc);
  write_json_file(out_path(resolved, "config_echo.json"), to_json(resolved));

  out << "F1 " << fmt(metrics.f1) << "  accuracy " << fmt(metrics.accuracy) << "  precision "
      << fmt(metrics.precision) << "  recall " << fmt(metrics.recall) << "\n";
  if (effect) out << "tau_hat " << fmt(effect->tau_hat) << "  PEHE " << fmt(effect->pehe) << "\n";
}

void report_error(ErrorKind kind, const std::string& message, const std::string& out_dir, std::ostream& err) {
  err << "error: " << message << "\n";
  Json j;
  j["error"] = {{"kind", std::string(kind_name(kind))}, {"message", message}};
  err << j.dump() << "\n";
  if (!out_dir.empty() && fs::is_directory(out_dir)) {
    try {
      write_json_file((fs::path(out_dir) / "error.json").string(), j);
    } catch (...) {
    }
  }
}

}  // namespace

Json to_json(const RunConfig& cfg) {
  Json j;
  j["command"] = cfg.command;
  j["data"] = cfg.data;
  j["schema"] = cfg.schema;
  j["out"] = cfg.out;
  j["report"] = cfg.report;
  j["truth"] = cfg.truth;
  j["scaling"] = scaling_name(cfg.scaling);
  j["subgroups"] = cfg.subgroups;
  j["verbosity"] = cfg.verbosity;
  j["train"] = to_json(cfg.train);
  j["synth"] = to_json(cfg.synth);
  j["grid"] = to_json(cfg.grid);
  return j;
}

RunConfig run_config_from_json(const Json& j, RunConfig base) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "run config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    auto str = [&]() {
      if (!v.is_string()) throw Error(ErrorKind::InvalidConfig, "config." + key + " must be a string");
      return v.get<std::string>();
    };
    if (key == "command") base.command = str();
    else if (key == "data") base.data = str();
    else if (key == "schema") base.schema = str();
    else if (key == "out") base.out = str();
    else if (key == "report") base.report = str();
    else if (key == "truth") base.truth = str();
    else if (key == "scaling") base.scaling = parse_scaling(str());
    else if (key == "subgroups" || key == "verbosity") {
      if (!v.is_number_unsigned()) throw Error(ErrorKind::InvalidConfig, "config." + key + " must be a non-negative integer");
      if (key == "subgroups") base.subgroups = v.get<std::size_t>();
      else base.verbosity = v.get<int>();
    } else if (key == "train") base.train = train_config_from_json(v, base.train);
    else if (key == "synth") base.synth = synth_config_from_json(v, base.synth);
    else if (key == "grid") base.grid = benchmark_grid_from_json(v, base.grid);
    else throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "' in run config");
  }
  return base;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential subgroup discovery"};
  app.name("diffsub");
  app.require_subcommand(1);
  Flags f;
  Options o;

  auto* discover = app.add_subcommand("discover", "find a differential subgroup in a CSV dataset");
  add_common(discover, f, o);
  add_train(discover, f, o);
  o.data = discover->add_option("--data", f.data, "input CSV");
  o.schema = discover->add_option("--schema", f.schema, "schema JSON (default: schema.json next to the data)");
  o.scaling = discover->add_option("--scaling", f.scaling, "standardize | minmax | none");
  o.subgroups = discover->add_option("--subgroups", f.subgroups, "number of subgroups to extract");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
  Options so;
  add_common(simulate, f, so);
  add_synth(simulate, f, so);
  so.subgroups = simulate->add_option("--subgroups", f.subgroups, "planted boxes (1 or 2)");

  auto* bench = app.add_subcommand("benchmark", "run the synthetic recovery grid");
  Options bo;
  add_common(bench, f, bo);
  add_train(bench, f, bo);
  add_synth(bench, f, bo);
  bo.grid = bench->add_option("--grid", f.grid, "grid JSON");

  auto* evaluate = app.add_subcommand("evaluate", "score a report against ground truth");
  Options eo;
  add_common(evaluate, f, eo);
  eo.report = evaluate->add_option("--report", f.report, "report.json from discover");
  eo.truth = evaluate->add_option("--truth", f.truth, "CSV with truth columns");
  eo.schema = evaluate->add_option("--schema", f.schema, "schema JSON (default: schema.json next to the truth CSV)");
  eo.scaling = evaluate->add_option("--scaling", f.scaling, "standardize | minmax | none");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(ErrorKind::InvalidConfig, e.what(), "", err);
    return kExitValidation;
  }

  std::string out_dir;
  try {
    if (discover->parsed()) {
      const auto cfg = resolve("discover", f, o);
      out_dir = cfg.out;
      run_discover(cfg, out, err);
    } else if (simulate->parsed()) {
      const auto cfg = resolve("simulate", f, so);
      out_dir = cfg.out;
      run_simulate(cfg, out);
    } else if (bench->parsed()) {
      const auto cfg = resolve("benchmark", f, bo);
      out_dir = cfg.out;
      run_benchmark(cfg, out, err);
    } else if (evaluate->parsed()) {
      const auto cfg = resolve("evaluate", f, eo);
      out_dir = cfg.out;
      run_evaluate(cfg, out);
    }
  } catch (const Error& e) {
    report_error(e.kind(), e.what(), out_dir, err);
    return is_validation(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    report_error(ErrorKind::Internal, e.what(), out_dir, err);
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace diffsub
