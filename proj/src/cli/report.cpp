#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "frango/cli.hpp"
#include "frango/format.hpp"

namespace frango::cli {

namespace {

using json = nlohmann::json;

json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return NAN;
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw ParseError("report: expected a number, got " + j.dump());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << content;
  os.flush();
  if (!os) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_number(v));
}

int Report::status() const {
  for (const auto& r : residuals)
    if (r.pass && !*r.pass) return 1;
  return 0;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_summary(std::ostream& os, const Report& r) {
  os << "metric,component,lattice_max,lattice_mean,tolerance,pass\n";
  for (const auto& row : r.residuals) {
    os << row.metric << ',' << row.component << ',' << format_number(row.lattice_max) << ','
       << format_number(row.lattice_mean) << ',' << (row.tolerance ? format_number(*row.tolerance) : "") << ','
       << (row.pass ? (*row.pass ? "true" : "false") : "") << '\n';
  }
}

nlohmann::json to_json(const Report& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["command"] = r.command;
  j["config_hash"] = r.config_hash;
  j["alpha"] = number_to_json(r.alpha);
  j["lattice"] = {{"counts", r.lattice}, {"exclude_base", r.exclude_base}};
  j["status"] = r.status();
  json rows = json::array();
  for (const auto& row : r.residuals) {
    json e;
    e["metric"] = row.metric;
    e["component"] = row.component;
    e["lattice_max"] = number_to_json(row.lattice_max);
    e["lattice_mean"] = number_to_json(row.lattice_mean);
    e["tolerance"] = row.tolerance ? number_to_json(*row.tolerance) : json(nullptr);
    e["pass"] = row.pass ? json(*row.pass) : json(nullptr);
    rows.push_back(std::move(e));
  }
  j["residuals"] = std::move(rows);
  json tables = json::array();
  for (const auto& t : r.tables) {
    json rs = json::array();
    for (const auto& row : t.rows) {
      json vals = json::array();
      for (double v : row) vals.push_back(number_to_json(v));
      rs.push_back(std::move(vals));
    }
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rs)}});
  }
  j["tables"] = std::move(tables);
  j["notes"] = r.notes;
  return j;
}

Report report_from_json(const nlohmann::json& j) {
  try {
    Report r;
    r.schema_version = j.at("schema_version").get<int>();
    r.command = j.at("command").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.alpha = number_from_json(j.at("alpha"));
    r.lattice = j.at("lattice").at("counts").get<std::vector<int>>();
    r.exclude_base = j.at("lattice").at("exclude_base").get<bool>();
    for (const auto& e : j.at("residuals")) {
      ResidualRow row;
      row.metric = e.at("metric").get<std::string>();
      row.component = e.at("component").get<std::string>();
      row.lattice_max = number_from_json(e.at("lattice_max"));
      row.lattice_mean = number_from_json(e.at("lattice_mean"));
      if (!e.at("tolerance").is_null()) row.tolerance = number_from_json(e.at("tolerance"));
      if (!e.at("pass").is_null()) row.pass = e.at("pass").get<bool>();
      r.residuals.push_back(std::move(row));
    }
    for (const auto& t : j.at("tables")) {
      Table tab;
      tab.name = t.at("name").get<std::string>();
      tab.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& row : t.at("rows")) {
        std::vector<double> vals;
        for (const auto& v : row) vals.push_back(number_from_json(v));
        tab.rows.push_back(std::move(vals));
      }
      r.tables.push_back(std::move(tab));
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::filesystem::path emit_report(const Report& r, Format format, const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory '" + out.string() + "': " + ec.message());
  std::filesystem::path main;
  if (format == Format::summary) {
    std::ostringstream os;
    write_summary(os, r);
    main = out / (r.command + ".csv");
    write_file(main, os.str());
  } else {
    main = out / (r.command + ".json");
    write_file(main, to_json(r).dump(2) + "\n");
  }
  for (const auto& a : r.artifacts) write_file(out / a.file, a.content);
  return main;
}

}  // namespace frango::cli
