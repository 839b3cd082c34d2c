#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pamfk::runner {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::optional<uint64_t> seed_override;
  int threads = 1;
  bool force = false;
};

struct RunOutcome {
  std::string output_path;
  std::string manifest_path;
  std::string summary;  // one-line human summary for the CLI
};

/// Executes one study described by a JSON config document: validates the
/// config (unknown keys rejected), runs the command, writes the CSV and a
/// JSON manifest echoing the effective config.
RunOutcome run_config(const std::string& config_json, const RunOptions& options);

}  // namespace pamfk::runner
