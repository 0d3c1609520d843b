#ifndef KANCIM_REPORT_HPP_
#define KANCIM_REPORT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace kancim {

// Shortest decimal string that parses back to the exact same double
// (std::to_chars); integral values print without a trailing ".0".
std::string format_double(double v);

/// Plain comma-separated table, one header row, newline row endings, no
/// quoting. Cells must not contain commas, quotes, or line breaks; the
/// writers reject offending cells instead of escaping them.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv_text(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

inline constexpr const char* kReportSchemaId = "kancim-report/1";

/// One machine-readable record per CLI run: what ran, with which seed,
/// which files came out, and the headline numbers. Keys are sorted on
/// serialization, so equal runs emit identical bytes.
struct RunReport {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> outputs;  // logical name -> path
  std::map<std::string, double> metrics;
};

nlohmann::json report_to_json(const RunReport& report);
void write_report(const std::string& path, const RunReport& report);

// Checks `doc` against the subset of JSON Schema the report schema uses:
// type, enum, required, properties, additionalProperties, items. Returns
// human-readable violations, empty when the document conforms.
std::vector<std::string> validate_against_schema(const nlohmann::json& doc,
                                                 const nlohmann::json& schema);

}  // namespace kancim

#endif
