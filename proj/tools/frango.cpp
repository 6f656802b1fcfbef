#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "frango/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"frango: fractional nonholonomic geometry runs"};
  std::string command, config_path, out = ".", format = "summary";
  app.add_option("command", command, "fracderiv | geometry | solve | lagrange | constcurv | curveflow")->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--format", format, "summary | structured")->check(CLI::IsMember({"summary", "structured"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  namespace cli = frango::cli;
  nlohmann::json config;
  {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "error: cannot read config '" << config_path << "'\n";
      return 2;
    }
    try {
      config = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << '\n';
      return 2;
    }
  }
  if (!config.is_object() || !config.contains("command") || config["command"] != command) {
    std::cerr << "error: command '" << command << "' does not match the config\n";
    return 2;
  }
  try {
    const auto dir = std::filesystem::path(config_path).parent_path();
    const auto report = cli::run(config, dir.empty() ? "." : dir);
    const auto path = cli::emit_report(report, format == "summary" ? cli::Format::summary : cli::Format::structured, out);
    for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
    std::cerr << "wrote " << path.string() << '\n';
    return report.status();
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
