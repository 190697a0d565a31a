#pragma once

#include <iosfwd>

#include <json.hpp>

#include "run_config.hpp"

namespace veil::cli {

// Each command writes its artifacts under config.out_dir (when set) and
// returns the report that main prints as a table or as JSON.
nlohmann::json cmd_train(const RunConfig& config, const RawConfig& raw);
nlohmann::json cmd_eval(const RunConfig& config);
nlohmann::json cmd_attack(const RunConfig& config);
nlohmann::json cmd_crossval(const RunConfig& config);
nlohmann::json cmd_synth(const RunConfig& config);

// Aligned plain-text rendering of a command report.
void print_table(std::ostream& out, Command command, const nlohmann::json& report);

}  // namespace veil::cli
