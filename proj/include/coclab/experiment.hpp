#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "coclab/cocycle.hpp"
#include "coclab/config.hpp"

namespace coclab {

/// Outcome of one CLI command. `json` is the full summary written to
/// <out>/<command>.json; apart from "wall_time_s" it depends only on the
/// config (threads included or not).
struct RunRecord {
  std::string command;
  bool pass = false;
  int exit_code = 0;  // 0 pass, 2 numeric failure
  nlohmann::ordered_json json;
  std::vector<std::string> files;
};

std::vector<std::string> command_names();

/// Throw ConfigParse naming the offending key when the config cannot
/// describe a valid base map or cocycle.
ToralAutomorphism build_base(const ExperimentConfig& cfg);
CocycleSpec build_cocycle(const ExperimentConfig& cfg);

/// Runs one command and writes its JSON and CSV files under out_dir
/// (created if needed; empty = write nothing). Numeric failures are
/// reported in the record; input errors throw.
RunRecord run_command(const std::string& command, const ExperimentConfig& cfg, const std::string& out_dir);

/// Process exit code for an exception escaping run_command.
int exit_code_for(const std::exception& e);

}  // namespace coclab
