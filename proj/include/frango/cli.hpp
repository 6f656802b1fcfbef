#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "frango/error.hpp"

namespace frango::cli {

inline constexpr int kSchemaVersion = 1;

// Config does not match the documented schema (exit status 2).
class UsageError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct ResidualRow {
  std::string metric;
  std::string component;
  double lattice_max = 0.0;
  double lattice_mean = 0.0;
  std::optional<double> tolerance;
  std::optional<bool> pass;

  bool operator==(const ResidualRow&) const = default;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool operator==(const Table&) const = default;
};

// Extra file written next to the report (curveflow's per-node frame dump).
struct Artifact {
  std::string file;
  std::string content;

  bool operator==(const Artifact&) const = default;
};

struct Report {
  int schema_version = kSchemaVersion;
  std::string command;
  std::string config_hash;
  double alpha = 1.0;
  std::vector<int> lattice;  // nodes per axis, empty when the command has no lattice
  bool exclude_base = false;
  std::vector<Table> tables;
  std::vector<ResidualRow> residuals;
  std::vector<std::string> notes;
  std::vector<Artifact> artifacts;  // not part of the structured form

  // 0 iff every declared tolerance passes.
  int status() const;
  bool operator==(const Report&) const = default;
};

// Numbers are stored rounded to 12 significant digits so that the structured form
// round-trips exactly.
double round12(double v);

// FNV-1a 64 of the canonical (key-sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Runs the pipeline named by config["command"]. base_dir resolves relative paths inside
// the config. Throws UsageError for schema violations, other frango errors for numeric
// failures.
Report run(const nlohmann::json& config, const std::filesystem::path& base_dir = ".");

enum class Format { summary, structured };

// summary: `metric,component,lattice_max,lattice_mean,tolerance,pass` rows.
void write_summary(std::ostream& os, const Report& r);
nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

// Writes <out>/<command>.csv or .json plus the artifacts; returns the main path.
// Throws Error naming the path when it cannot be written.
std::filesystem::path emit_report(const Report& r, Format format, const std::filesystem::path& out);

}  // namespace frango::cli
