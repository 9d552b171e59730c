#pragma once

#include <iosfwd>
#include <string>

#include "diffsub/data.hpp"
#include "diffsub/eval.hpp"
#include "diffsub/serialize.hpp"
#include "diffsub/synthgen.hpp"
#include "diffsub/trainer.hpp"

namespace diffsub {

// Everything needed to repeat one invocation. Written as config_echo.json
// and accepted back through --config.
struct RunConfig {
  std::string command;  // discover | simulate | benchmark | evaluate
  std::string data;
  std::string schema;
  std::string out;
  std::string report;  // evaluate
  std::string truth;   // evaluate
  Scaling scaling = Scaling::Standardize;
  std::size_t subgroups = 1;
  int verbosity = 0;
  TrainConfig train;
  SynthConfig synth;
  BenchmarkGrid grid;
};

Json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Parses argv, runs the command and maps failures to exit codes. The human
// summary goes to `out`; error lines and the error JSON go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffsub
