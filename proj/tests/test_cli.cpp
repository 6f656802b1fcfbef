#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "frango/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
namespace cli = frango::cli;

namespace {

json fracderiv_config() {
  return json::parse(R"({"schema_version": 1, "command": "fracderiv", "alpha": 0.5, "box": [[0, 2]],
                         "field": "x^2", "points": [1]})");
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("frango_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_tool(const std::vector<std::string>& args) {
  std::string cmd = FRANGO_TOOL;
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  auto p = dir / "config.json";
  std::ofstream(p) << cfg.dump();
  return p;
}

}  // namespace

TEST(CliRun, FracderivExample) {
  const auto r = cli::run(fracderiv_config());
  ASSERT_EQ(r.tables.size(), 1u);
  EXPECT_NEAR(r.tables[0].rows[0][1], 1.504505, 1e-6);
  EXPECT_EQ(r.status(), 0);
}

TEST(CliRun, SchemaViolationsAreUsageErrors) {
  auto cfg = fracderiv_config();
  cfg["command"] = "";
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["schema_version"] = 2;
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["colour"] = 1;
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["alpha"] = 1.5;
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["field"] = "x^";
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["tolerances"] = {{"nothing", 1.0}};
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
  cfg = fracderiv_config();
  cfg["tolerances"] = {{"fracderiv", -1.0}};
  EXPECT_THROW(cli::run(cfg), cli::UsageError);
}

TEST(CliRun, NumericFailureIsNotUsage) {
  auto cfg = fracderiv_config();
  cfg["points"] = json::array({-1.0});
  try {
    cli::run(cfg);
    FAIL() << "expected a domain error";
  } catch (const cli::UsageError&) {
    FAIL() << "domain error reported as usage";
  } catch (const frango::Error&) {
  }
}

TEST(CliRun, ToleranceDecidesStatus) {
  auto cfg = fracderiv_config();
  cfg["tolerances"] = {{"fracderiv", 2.0}};
  EXPECT_EQ(cli::run(cfg).status(), 0);
  cfg["tolerances"] = {{"fracderiv:p1", 1.0}};
  const auto r = cli::run(cfg);
  EXPECT_EQ(r.status(), 1);
  EXPECT_EQ(r.residuals[0].pass, false);
}

TEST(CliReport, EmptyReportIsHeaderOnly) {
  cli::Report r;
  r.command = "geometry";
  const auto dir = scratch("empty");
  const auto path = cli::emit_report(r, cli::Format::summary, dir);
  EXPECT_EQ(slurp(path), "metric,component,lattice_max,lattice_mean,tolerance,pass\n");
}

TEST(CliReport, RowsKeepDeclaredOrder) {
  cli::Report r;
  r.command = "solve";
  r.residuals.push_back({"formula", "eq2", 1e-7, 1e-8, 1e-6, true});
  r.residuals.push_back({"formula", "eq1", 0.5, 0.25, {}, {}});
  std::ostringstream os;
  cli::write_summary(os, r);
  EXPECT_EQ(os.str(),
            "metric,component,lattice_max,lattice_mean,tolerance,pass\n"
            "formula,eq2,1e-07,1e-08,1e-06,true\n"
            "formula,eq1,0.5,0.25,,\n");
}

TEST(CliReport, StructuredRoundTrip) {
  auto cfg = fracderiv_config();
  cfg["points"] = json::array({0.3, 1.0 / 3.0, 1.7});
  cfg["tolerances"] = {{"backend_agreement", 1e-5}};
  const auto r = cli::run(cfg);
  const auto back = cli::report_from_json(json::parse(cli::to_json(r).dump(2)));
  EXPECT_EQ(back, r);

  cli::Report odd;
  odd.command = "geometry";
  odd.residuals.push_back({"torsion", "T", NAN, INFINITY, {}, {}});
  const auto b2 = cli::report_from_json(json::parse(cli::to_json(odd).dump()));
  EXPECT_TRUE(std::isnan(b2.residuals[0].lattice_max));
  EXPECT_EQ(b2.residuals[0].lattice_mean, INFINITY);
}

TEST(CliReport, UnwritableOutputNamesThePath) {
  const auto dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  cli::Report r;
  r.command = "solve";
  try {
    cli::emit_report(r, cli::Format::summary, dir / "file" / "sub");
    FAIL();
  } catch (const frango::Error& e) {
    EXPECT_NE(std::string(e.what()).find("file/sub"), std::string::npos);
  }
}

TEST(CliReport, ConfigHashIgnoresKeyOrder) {
  const auto a = json::parse(R"({"a": 1, "b": [1, 2]})");
  const auto b = json::parse(R"({"b": [1, 2], "a": 1})");
  EXPECT_EQ(cli::config_hash(a), cli::config_hash(b));
  EXPECT_NE(cli::config_hash(a), cli::config_hash(json::parse(R"({"a": 2, "b": [1, 2]})")));
  EXPECT_EQ(cli::config_hash(a).size(), 16u);
}

// Every shipped example: two runs give byte-identical files in both formats, and the
// declared tolerances pass.
TEST(CliExamples, DeterministicAndPassing) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(FRANGO_EXAMPLES)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const auto cfg = json::parse(slurp(entry.path()));
    SCOPED_TRACE(entry.path().string());
    std::string first[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto r = cli::run(cfg, entry.path().parent_path());
      EXPECT_EQ(r.status(), 0);
      const auto dir = scratch("det" + std::to_string(rep));
      const auto s = cli::emit_report(r, cli::Format::summary, dir);
      const auto j = cli::emit_report(r, cli::Format::structured, dir);
      const std::string text = slurp(s) + slurp(j);
      if (rep == 0) first[0] = text;
      else EXPECT_EQ(text, first[0]);
    }
  }
  EXPECT_GE(seen, 6);
}

TEST(CliTool, ExitStatus) {
  const auto dir = scratch("tool");
  auto cfg = fracderiv_config();
  const auto good = write_config(dir, cfg);
  EXPECT_EQ(run_tool({"fracderiv", "--config", good.string(), "--out", (dir / "o").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "fracderiv.csv"));
  EXPECT_EQ(run_tool({"fracderiv", "--config", good.string(), "--out", (dir / "o").string(), "--format",
                      "structured"}),
            0);
  EXPECT_TRUE(fs::exists(dir / "o" / "fracderiv.json"));
  EXPECT_EQ(run_tool({"fracderiv", "--config", good.string(), "--format", "xml"}), 2);
  EXPECT_EQ(run_tool({"geometry", "--config", good.string()}), 2);
  EXPECT_EQ(run_tool({"fracderiv"}), 2);

  cfg["tolerances"] = {{"fracderiv", 1e-3}};
  EXPECT_EQ(run_tool({"fracderiv", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()}), 1);

  cfg = fracderiv_config();
  cfg["command"] = "";
  EXPECT_EQ(run_tool({"", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()}), 2);

  cfg = fracderiv_config();
  cfg["points"] = json::array({-1.0});
  EXPECT_EQ(run_tool({"fracderiv", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()}), 1);

  std::ofstream(dir / "broken.json") << "{\"schema_version\": ";
  EXPECT_EQ(run_tool({"fracderiv", "--config", (dir / "broken.json").string()}), 2);
  EXPECT_EQ(run_tool({"fracderiv", "--config", (dir / "missing.json").string()}), 2);
}
