#include "anie/cli/config.hpp"

#include <algorithm>
#include <cmath>

#include "anie/error.hpp"
#include "anie/io.hpp"

namespace anie::cli {

namespace {

using nlohmann::json;

FieldSpec field(std::string name, FieldType type, std::string description) {
  FieldSpec f;
  f.name = std::move(name);
  f.type = type;
  f.description = std::move(description);
  return f;
}

FieldSpec required(FieldSpec f) {
  f.required = true;
  return f;
}

FieldSpec range(FieldSpec f, std::optional<double> lo, std::optional<double> hi) {
  f.minimum = lo;
  f.maximum = hi;
  return f;
}

FieldSpec one_of(FieldSpec f, std::vector<std::string> choices) {
  f.choices = std::move(choices);
  return f;
}

std::vector<CommandSchema> build_schemas() {
  const auto seed = range(field("seed", FieldType::integer, "base seed for all randomness"), 0, {});
  const auto out = field("out", FieldType::string, "output directory");
  std::vector<CommandSchema> all;

  all.push_back({"simulate",
                 {required(one_of(field("model", FieldType::string, "generator"),
                                  {"er_blocks", "dsbm"})),
                  required(range(field("n_nodes", FieldType::integer, "number of nodes"), 1, {})),
                  seed,
                  field("params", FieldType::object,
                        "scale, offset (er_blocks); lambda_intra, lambda_inter, merge (dsbm)"),
                  out}});

  all.push_back(
      {"fit",
       {required(field("input", FieldType::string, "events CSV (u,v,t)")),
        range(field("n_nodes", FieldType::integer, "node count override"), 1, {}),
        range(field("horizon", FieldType::number, "observation horizon override"), 0, {}),
        field("directed", FieldType::boolean, "directedness override"),
        one_of(field("dataset", FieldType::string, "selects the default Haar level"),
               {"er_blocks", "dsbm"}),
        range(field("levels", FieldType::integer, "Haar levels J (B = 2^J functions)"), 0, 24),
        field("basis", FieldType::object, "basis descriptor; overrides levels"),
        required(range(field("rank", FieldType::integer, "subspace rank D"), 1, {})),
        range(field("alpha", FieldType::number, "FDR level"), 0, 1),
        seed,
        range(field("scree_count", FieldType::integer, "singular values exported"), 0, {}),
        field("self_loops", FieldType::boolean, "keep u == v events"),
        out}});

  all.push_back(
      {"eval",
       {required(field("truth", FieldType::string, "ground-truth JSON from simulate")),
        required(field("model", FieldType::string, "fit output directory")),
        field("events", FieldType::string, "events CSV for baselines; defaults to the fit input"),
        range(field("patch", FieldType::integer, "nodes in the MISE pair patch"), 1, {}),
        range(field("quad_points", FieldType::integer, "midpoint quadrature cells"), 1, {}),
        field("baselines", FieldType::array, "subset of [\"hist\", \"kde\"]"),
        range(field("bins", FieldType::integer, "histogram bins"), 1, {}),
        range(field("bandwidth", FieldType::number, "kernel bandwidth"), 0, {}),
        one_of(field("baseline_subspace", FieldType::string, "projection subspace for baselines"),
               {"anie", "hist"}),
        seed,
        out}});

  all.push_back(
      {"anomaly",
       {required(field("model", FieldType::string, "fit output directory")),
        one_of(field("source", FieldType::string, "coefficients entering the score"),
               {"raw", "thresholded"}),
        out}});
  return all;
}

const std::vector<CommandSchema>& schemas() {
  static const std::vector<CommandSchema> all = build_schemas();
  return all;
}

std::string_view type_name(FieldType t) {
  switch (t) {
    case FieldType::integer: return "integer";
    case FieldType::number: return "number";
    case FieldType::boolean: return "boolean";
    case FieldType::string: return "string";
    case FieldType::object: return "object";
    case FieldType::array: return "array";
  }
  return "";
}

bool has_type(const json& v, FieldType t) {
  switch (t) {
    case FieldType::integer: return v.is_number_integer();
    case FieldType::number: return v.is_number();
    case FieldType::boolean: return v.is_boolean();
    case FieldType::string: return v.is_string();
    case FieldType::object: return v.is_object();
    case FieldType::array: return v.is_array();
  }
  return false;
}

}  // namespace

const CommandSchema& schema_for(std::string_view command) {
  for (const auto& s : schemas()) {
    if (s.command == command) return s;
  }
  throw ParameterError("unknown command '" + std::string(command) + "'");
}

std::vector<std::string> schema_commands() {
  std::vector<std::string> out;
  for (const auto& s : schemas()) out.push_back(s.command);
  return out;
}

void validate(const json& config, const CommandSchema& schema) {
  const std::string where = schema.command + " config: ";
  if (!config.is_object()) throw ParameterError(where + "expected a JSON object");
  for (const auto& [key, value] : config.items()) {
    const auto it = std::find_if(schema.fields.begin(), schema.fields.end(),
                                 [&](const FieldSpec& f) { return f.name == key; });
    if (it == schema.fields.end()) throw ParameterError(where + "unknown key '" + key + "'");
    const FieldSpec& f = *it;
    if (!has_type(value, f.type)) {
      throw ParameterError(where + "'" + key + "' must be of type " + std::string(type_name(f.type)));
    }
    if (value.is_number()) {
      const double x = value.get<double>();
      if (!std::isfinite(x) || (f.minimum && x < *f.minimum) || (f.maximum && x > *f.maximum)) {
        std::string bounds = "[" + (f.minimum ? format_double(*f.minimum) : "-inf") + ", " +
                             (f.maximum ? format_double(*f.maximum) : "inf") + "]";
        throw ParameterError(where + "'" + key + "' must lie in " + bounds);
      }
    }
    if (!f.choices.empty() &&
        std::find(f.choices.begin(), f.choices.end(), value.get<std::string>()) == f.choices.end()) {
      throw ParameterError(where + "'" + key + "' has unsupported value '" +
                           value.get<std::string>() + "'");
    }
  }
  for (const auto& f : schema.fields) {
    if (f.required && !config.contains(f.name)) {
      throw ParameterError(where + "missing required key '" + f.name + "'");
    }
  }
}

nlohmann::ordered_json schema_document(const CommandSchema& schema) {
  nlohmann::ordered_json doc;
  doc["$schema"] = "http://json-schema.org/draft-07/schema#";
  doc["title"] = "anie " + schema.command;
  doc["type"] = "object";
  nlohmann::ordered_json props = nlohmann::ordered_json::object();
  nlohmann::ordered_json req = nlohmann::ordered_json::array();
  for (const auto& f : schema.fields) {
    nlohmann::ordered_json p;
    p["type"] = type_name(f.type);
    if (f.minimum) p["minimum"] = *f.minimum;
    if (f.maximum) p["maximum"] = *f.maximum;
    if (!f.choices.empty()) p["enum"] = f.choices;
    p["description"] = f.description;
    props[f.name] = std::move(p);
    if (f.required) req.push_back(f.name);
  }
  doc["properties"] = std::move(props);
  doc["required"] = std::move(req);
  doc["additionalProperties"] = false;
  return doc;
}

}  // namespace anie::cli
