#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace poisonlens {

using Json = nlohmann::json;

// Round-trip decimal form ("%.17g"), with nan/inf spelled out.
std::string format_double(double v);

// FNV-1a 64-bit of the compact dump of j. Object keys are sorted by the
// JSON type, so equal configs hash equally regardless of key order.
std::uint64_t config_hash(const Json& j);
std::string config_hash_hex(const Json& j);

class ResultsTable {
 public:
  ResultsTable() = default;
  ResultsTable(std::string experiment, std::vector<std::string> columns);

  const std::string& experiment() const { return experiment_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  // Cells must match the schema length; throws InvalidConfig otherwise.
  void add_row(std::vector<std::string> cells);

  // RFC-4180 quoting where a cell needs it; '\n' line endings.
  std::string to_csv() const;

  // Additional files written next to the table, e.g. weight grids.
  std::vector<std::pair<std::string, std::string>> attachments;
  // Free-form summary values copied into the sidecar.
  Json summary = Json::object();

 private:
  std::string experiment_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct PersistedPaths {
  std::string csv;
  std::string sidecar;
  std::vector<std::string> attachments;
};

// Writes <experiment>.csv, <experiment>.json and the attachments into
// output_dir, creating it if needed. File names may not contain path
// separators, so nothing lands outside output_dir.
PersistedPaths persist(const ResultsTable& table, const Json& config, const std::string& output_dir);

std::string artifact_version();

}  // namespace poisonlens
