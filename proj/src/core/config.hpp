#pragma once

// Run configuration documents and command dispatch.
//
//   {
//     "spec":    { ...NeckSpec... },            // required except for selftest
//     "command": { "<name>": { ...params... } },  // exactly one block
//     "seed":    42,
//     "output":  { "path": "report.json", "format": "json" }
//   }

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "serialization.hpp"

namespace neckcalib {

enum class Command { selftest, find_q0, calibrate, comass_max, probe, volume_compare, minimality };

const char* to_string(Command c) noexcept;
std::optional<Command> parse_command(const std::string& name) noexcept;

enum class OutputFormat { json, csv };

struct OutputSpec {
  std::string path;  // empty: standard output
  OutputFormat format = OutputFormat::json;
};

/// Parameters for every command; each command reads and emits only its own subset.
struct CommandParams {
  // find_q0 (every command that needs a spec)
  int grid = 101;
  double refine_tol = 1e-10;
  // calibrate, probe
  std::uint64_t points = 10000;
  std::uint64_t frames_per_point = 10;
  std::string mode = "random";  // calibrate only: "random" | "lifted"
  // comass-max, probe
  int restarts = 100;
  int iters = 200;
  double initial_step = 0.1;
  double decay = 0.7;
  // selftest
  std::uint64_t instances = 1000;
  int max_n = 10;
  // volume-compare, minimality
  int nodes_per_angle = 24;
  std::vector<std::string> modes;  // empty: every mode of degree <= 2
  Vec amplitudes{0.05, 0.1, 0.2};
  std::uint64_t trials = 500;
  double step = 1e-3;
};

struct RunConfig {
  std::optional<Json> spec;  // normalized spec document
  Command command = Command::selftest;
  CommandParams params;
  std::uint64_t seed = 0;
  OutputSpec output;
};

/// Strict parse: unknown keys, wrong types and negative counts raise ErrorKind::config.
RunConfig parse_config(const Json& doc);
/// Fully resolved document (defaults filled in); parse_config(emit_config(c)) == c.
Json emit_config(const RunConfig& config);

/// Applies "a.b.c=value" to a raw document. The value is read as JSON when it
/// parses as JSON and as a plain string otherwise.
void apply_override(Json& doc, const std::string& assignment);

struct RunResult {
  Json report;
  int exit_code = 0;  // 0 clean, 3 finding, 2 selftest failure
};

/// Builds the spec, locates q0 where needed and dispatches. Errors propagate as Error.
RunResult run(const RunConfig& config, unsigned threads);

/// JSON (pretty, trailing newline) or one-row CSV with a header line.
std::string render_report(const Json& report, OutputFormat format);

/// CSV header for a command; column order is part of the output contract.
const std::vector<std::string>& csv_columns(Command c);

/// Exit code for an error kind: 1 for configuration-side problems, 2 for numerical ones.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace neckcalib
