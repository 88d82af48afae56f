#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace sphfit::run {

inline constexpr const char* kVersion = "0.1.0";

struct Outcome {
  std::vector<std::string> files; // paths written, relative to out_dir
  std::string message;            // one-line summary for the terminal
};

// Validates the config (unknown or malformed keys are rejected before any
// computation), executes the command named by config["command"], writes its
// output files plus <command>_manifest.json under out_dir, and returns the
// file list.  Outputs are pure functions of the config, so re-running the
// same config reproduces every file byte for byte.
Outcome run_command(const nlohmann::json& config, const std::string& out_dir);

Outcome run_json_text(const std::string& config_text, const std::string& out_dir);

// Re-executes the config echoed inside a previously written manifest.
Outcome run_manifest(const std::string& manifest_path, const std::string& out_dir);

} // namespace sphfit::run
