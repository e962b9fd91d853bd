#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinmotion::cli {

// A configuration document failed validation (unknown key, missing unit
// suffix, bad type, out-of-range value, unknown command, ...). The message
// names the offending key path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A validated run configuration: the command plus its canonical parameter
// document. Canonical means every key the command accepts is present
// (defaults filled), keys are sorted, and values keep the file's explicit
// units (the *_MHz / *_um / ... suffixes say which); conversion to internal
// units (rad/s, meters) happens in the accessors, so serialising and
// re-parsing is exact.
struct RunConfig {
  std::string command;
  nlohmann::json params = nlohmann::json::object();

  // Raw value in the config's units. Throws ConfigError if the key holds a
  // grid (use grid()).
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::string text(const std::string& key) const;

  // Value in internal units: *_MHz keys in rad/s, *_um and *_nm in meters,
  // everything else unchanged.
  double internal(const std::string& key) const;

  // The key's value list: a one-element vector for scalars. Values stay in
  // the config's units.
  std::vector<double> grid(const std::string& key) const;
  bool is_grid(const std::string& key) const;

  int trials() const;
  uint64_t seed() const;
  int workers() const;
  std::string out_dir() const;

  bool operator==(const RunConfig&) const = default;
};

// The supported commands, in display order.
const std::vector<std::string>& commands();

// Validate and normalise a JSON configuration document; the document must
// name its command. Unknown keys, bare keys missing their unit suffix,
// wrong types, lists on non-sweepable keys, and out-of-range values all
// throw ConfigError with the key named in the message.
RunConfig parse_config(const std::string& json_text);

// Same, with the command supplied by the caller (the CLI subcommand). The
// document may omit "command"; if present it must agree.
RunConfig parse_config_for(const std::string& command,
                           const std::string& json_text);

// Canonical serialisation; parse_config(config_to_json(cfg)) == cfg.
std::string config_to_json(const RunConfig& cfg);

struct RunOutcome {
  int exit_code = 0;  // 0 success, 2 config error, 3 runtime error
  std::vector<std::string> files;  // artifact paths written
};

// Execute the command and write its artifacts (results.csv/results.json
// for sweeps, command-specific CSVs otherwise, manifest.json always) into
// cfg.out_dir(). Never throws: failures are reported in the outcome and as
// a one-line {"error": {"type", "message"}} record on err.
RunOutcome run(const RunConfig& cfg, std::ostream& err);

// Full command-line entry point behind main():
//   <tool> <command> --config <path> [--out <dir>] [--trials N] [--seed S]
//          [--workers W]
// Returns the process exit code (0 success, 2 config error, 3 runtime
// error); errors are emitted as one-line JSON records on err.
int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace spinmotion::cli
