// Command-line front end: scenario simulation, calibration, parameter sweeps
// and the standalone power / channel-plan reports.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"
#include "qcsim/scenario.hpp"

namespace {

// Exit codes: 0 ok, 2 bad input (missing file, parse error, unknown
// parameter), 3 domain invariant violation, 1 anything else.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitParse = 2;
constexpr int kExitInvariant = 3;

void print_summary(const nlohmann::json& report, const std::string& format) {
  if (format == "csv") {
    // Flat key,value rows for quick grepping; nested objects are skipped in
    // favor of their scalar leaves.
    std::function<void(const nlohmann::json&, const std::string&)> walk =
        [&](const nlohmann::json& node, const std::string& prefix) {
          for (const auto& [key, value] : node.items()) {
            const std::string path = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object()) {
              walk(value, path);
            } else if (value.is_primitive()) {
              std::cout << path << ',' << value.dump() << '\n';
            }
          }
        };
    walk(report, "");
  } else {
    std::cout << report.dump(2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cryogenic qubit control and readout chain simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";
  std::string format = "json";
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "Scenario config (JSON)")->required();
    cmd->add_option("--out-dir", out_dir, "Output directory");
    cmd->add_option("--seed", seed, "Override the scenario seed");
    cmd->add_option("--format", format, "Summary format printed to stdout")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Run the full control/readout loop");
  add_common(simulate);
  CLI::App* calibrate = app.add_subcommand("calibrate", "Run calibration only");
  add_common(calibrate);
  CLI::App* power_report = app.add_subcommand("power-report", "Power accounting for the program");
  add_common(power_report);
  CLI::App* fdma_plan = app.add_subcommand("fdma-plan", "Channel allocation for the band");
  add_common(fdma_plan);

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep a registered parameter");
  add_common(sweep);
  std::string parameter;
  std::string values_arg;
  sweep->add_option("--param", parameter, "Parameter: snr, duty, multiplex, jitter, matching")
      ->required();
  sweep->add_option("--values", values_arg, "Comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitParse;
  }

  qcsim::harness::Options options;
  options.out_dir = out_dir;
  options.seed_override = seed;

  try {
    qcsim::harness::RunArtifacts artifacts;
    if (simulate->parsed()) {
      artifacts = qcsim::harness::run_scenario(config, options);
    } else if (calibrate->parsed()) {
      artifacts = qcsim::harness::run_calibrate(config, options);
    } else if (power_report->parsed()) {
      artifacts = qcsim::harness::run_power_report(config, options);
    } else if (fdma_plan->parsed()) {
      artifacts = qcsim::harness::run_fdma_plan(config, options);
    } else {
      std::vector<std::string> values;
      for (const auto& v : qcsim::csv::split(values_arg, ',')) {
        if (!v.empty()) values.push_back(v);
      }
      artifacts = qcsim::harness::run_sweep(config, parameter, values, options);
    }
    print_summary(artifacts.report, format);
    return kExitOk;
  } catch (const qcsim::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const qcsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
