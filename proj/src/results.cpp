#include "poisonlens/results.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>

#include "poisonlens/error.hpp"
#include "poisonlens/io.hpp"

#ifndef POISONLENS_VERSION
#define POISONLENS_VERSION "0.0.0"
#endif

namespace poisonlens {

std::string artifact_version() { return POISONLENS_VERSION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t config_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const Json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(j)));
  return buf;
}

ResultsTable::ResultsTable(std::string experiment, std::vector<std::string> columns)
    : experiment_(std::move(experiment)), columns_(std::move(columns)) {}

void ResultsTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    raise(ErrorCode::InvalidConfig, "results row has " + std::to_string(cells.size()) + " cells, schema has " +
                                        std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(cells));
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_cell(cells[i]);
  }
  line += '\n';
  return line;
}

void check_file_name(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos || name == "." ||
      name == "..") {
    raise(ErrorCode::IoError, "refusing to write '" + name + "' outside the output directory");
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string ResultsTable::to_csv() const {
  std::string out = join_csv(columns_);
  for (const auto& row : rows_) out += join_csv(row);
  return out;
}

PersistedPaths persist(const ResultsTable& table, const Json& config, const std::string& output_dir) {
  namespace fs = std::filesystem;
  check_file_name(table.experiment() + ".csv");
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create " + output_dir + ": " + ec.message());
  const fs::path dir(output_dir);

  PersistedPaths paths;
  paths.csv = (dir / (table.experiment() + ".csv")).string();
  paths.sidecar = (dir / (table.experiment() + ".json")).string();
  write_text_file(paths.csv, table.to_csv());
  for (const auto& [name, content] : table.attachments) {
    check_file_name(name);
    paths.attachments.push_back((dir / name).string());
    write_text_file(paths.attachments.back(), content);
  }

  Json side;
  side["experiment"] = table.experiment();
  side["config"] = config;
  side["config_hash"] = config_hash_hex(config);
  side["artifact_version"] = artifact_version();
  side["timestamp"] = utc_timestamp();
  side["columns"] = table.columns();
  side["row_count"] = table.rows().size();
  side["summary"] = table.summary;
  Json files = Json::array();
  for (const auto& [name, content] : table.attachments) files.push_back(name);
  side["attachments"] = files;
  write_text_file(paths.sidecar, side.dump(2) + "\n");
  return paths;
}

}  // namespace poisonlens
