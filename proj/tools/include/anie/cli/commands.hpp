#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "anie/model.hpp"
#include "json.hpp"

namespace anie::cli {

// Each command takes a validated config object and logs notices to `log`.

// Writes events.csv (+ events.json sidecar) and truth.json.
void cmd_simulate(const nlohmann::json& config, std::ostream& log);

// Writes subspace.csv, scree.csv, affinity.json, mask.json and manifest.json.
void cmd_fit(const nlohmann::json& config, std::ostream& log);

// Writes metrics.json and returns its content.
nlohmann::ordered_json cmd_eval(const nlohmann::json& config, std::ostream& log);

// Writes anomaly.csv (per scale) and anomaly_summed.csv (finest cells).
void cmd_anomaly(const nlohmann::json& config, std::ostream& log);

// Reassembles the fitted model from a fit output directory.
IntensityModel load_bundle(const std::filesystem::path& dir);

// Full command-line entry point; returns the process exit code
// (0 ok, 2 usage, 3 data, 4 numeric).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anie::cli
