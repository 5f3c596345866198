#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace anie::cli {

enum class FieldType { integer, number, boolean, string, object, array };

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::string;
  bool required = false;
  std::optional<double> minimum;
  std::optional<double> maximum;
  std::vector<std::string> choices;
  std::string description;
};

struct CommandSchema {
  std::string command;
  std::vector<FieldSpec> fields;
};

// Known commands: simulate, fit, eval, anomaly.
const CommandSchema& schema_for(std::string_view command);
std::vector<std::string> schema_commands();

// Rejects unknown keys, missing required keys, wrong types, out-of-range
// numbers and values outside the allowed choices (ParameterError).
void validate(const nlohmann::json& config, const CommandSchema& schema);

// JSON Schema rendering of a command schema.
nlohmann::ordered_json schema_document(const CommandSchema& schema);

}  // namespace anie::cli
