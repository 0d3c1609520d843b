#include "kancim/report.hpp"

#include <charconv>
#include <fstream>

#include "kancim/errors.hpp"

namespace kancim {

namespace {

void check_cell(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") != std::string::npos)
    throw std::logic_error("csv cell needs quoting, refusing: '" + cell + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv_text(const CsvTable& table) {
  std::string out;
  auto put_row = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      check_cell(cells[i]);
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  put_row(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::logic_error("csv row width " + std::to_string(row.size()) +
                             " does not match header width " +
                             std::to_string(table.header.size()));
    put_row(row);
  }
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  const std::string text = to_csv_text(table);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["schema"] = kReportSchemaId;
  j["command"] = report.command;
  j["seed"] = report.seed;
  j["outputs"] = nlohmann::json::object();
  for (const auto& [name, path] : report.outputs) j["outputs"][name] = path;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [name, value] : report.metrics) j["metrics"][name] = value;
  return j;
}

void write_report(const std::string& path, const RunReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

namespace {

using nlohmann::json;

bool type_matches(const json& doc, const std::string& t) {
  if (t == "object") return doc.is_object();
  if (t == "array") return doc.is_array();
  if (t == "string") return doc.is_string();
  if (t == "boolean") return doc.is_boolean();
  if (t == "integer") return doc.is_number_integer() || doc.is_number_unsigned();
  if (t == "number") return doc.is_number();
  if (t == "null") return doc.is_null();
  return false;
}

std::string shown(const std::string& path) { return path.empty() ? "/" : path; }

void check_node(const json& doc, const json& schema, const std::string& path,
                std::vector<std::string>& out) {
  if (schema.contains("type")) {
    const json& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(doc, t.get<std::string>());
    } else {
      for (const auto& alt : t)
        if (type_matches(doc, alt.get<std::string>())) ok = true;
    }
    if (!ok) {
      out.push_back(shown(path) + ": expected type " + t.dump() + ", got " +
                    doc.type_name());
      return;  // further keyword checks would only repeat the mismatch
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& allowed : schema.at("enum"))
      if (doc == allowed) ok = true;
    if (!ok)
      out.push_back(shown(path) + ": value " + doc.dump() + " not in enum " +
                    schema.at("enum").dump());
  }
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema.at("required"))
        if (!doc.contains(key.get<std::string>()))
          out.push_back(shown(path) + ": missing required key '" +
                        key.get<std::string>() + "'");
    const json* props =
        schema.contains("properties") ? &schema.at("properties") : nullptr;
    for (const auto& [key, value] : doc.items()) {
      if (props && props->contains(key)) {
        check_node(value, props->at(key), path + "/" + key, out);
      } else if (schema.contains("additionalProperties")) {
        const json& extra = schema.at("additionalProperties");
        if (extra.is_boolean() && !extra.get<bool>())
          out.push_back(shown(path) + ": unexpected key '" + key + "'");
        else if (extra.is_object())
          check_node(value, extra, path + "/" + key, out);
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (size_t i = 0; i < doc.size(); ++i)
      check_node(doc[i], schema.at("items"), path + "/" + std::to_string(i),
                 out);
  }
}

}  // namespace

std::vector<std::string> validate_against_schema(const nlohmann::json& doc,
                                                 const nlohmann::json& schema) {
  std::vector<std::string> violations;
  check_node(doc, schema, "", violations);
  return violations;
}

}  // namespace kancim
