#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcsim/awg.hpp"
#include "qcsim/discriminator.hpp"
#include "qcsim/fdma.hpp"
#include "qcsim/power.hpp"
#include "qcsim/readout.hpp"
#include "qcsim/sequencer.hpp"

namespace qcsim::harness {

/// Everything a run needs, loaded from one JSON config. Paths inside the
/// config resolve relative to the config file.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;

  seq::ClockTree clock_tree;
  seq::Program program;
  awg::WaveformMemory waveforms;
  awg::DdsConfig dds;
  std::vector<double> channel_carriers_hz;
  double channel_amplitude_v = 20e-3;
  std::optional<awg::LoSpec> lo_comparison;
  std::size_t lo_comparison_samples = 200000;

  readout::QubitReadoutModel qubit_model;
  // Cascade layout: n_front_stages stages, then n_cmos_stages instances of
  // the matched CMOS LNA, then any trailing stages (e.g. line loss).
  readout::ReadoutCascade cascade;
  readout::MatchingChoice matching = readout::MatchingChoice::Ohm500;
  int n_front_stages = 0;
  int n_cmos_stages = 0;
  std::vector<std::string> cascade_assumptions;
  readout::AdcSpec adc;

  std::vector<int> initial_states;
  std::size_t calibration_shots = 1000;
  std::size_t recal_shots = 500;
  std::optional<std::filesystem::path> discriminator_import;
  std::size_t monte_carlo_shots = 10000;

  seq::RunConfig run_config;

  std::int64_t frame_cycles = 10000;
  std::vector<power::BlockPower> power_blocks;
  power::GatingPolicy gating_policy;

  std::optional<fdma::Band> fdma_band;
  double fdma_channel_bw_hz = 40e6;
  double fdma_guard_hz = 10e6;
  int fdma_n_qubits = 1;
  double fdma_rolloff_exponent = 2.0;
  int multiplex_ratio = 1;

  static Scenario load(const std::filesystem::path& config_path);
};

struct Options {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed_override;
};

struct RunArtifacts {
  nlohmann::json report;
  std::filesystem::path report_path;
};

/// Full loop: compile, calibrate, execute with measurement feedback, account
/// power, plan FDMA and write report.json plus the CSV exports.
RunArtifacts run_scenario(const std::filesystem::path& config_path, const Options& options);

/// Calibration only: writes calibration.csv and discriminator.csv.
RunArtifacts run_calibrate(const std::filesystem::path& config_path, const Options& options);

/// Static power accounting from the compiled timeline.
RunArtifacts run_power_report(const std::filesystem::path& config_path, const Options& options);

/// Channel plan for the configured band.
RunArtifacts run_fdma_plan(const std::filesystem::path& config_path, const Options& options);

/// One row per value: parameter, value, fidelity and the power column for
/// that parameter. Registered parameters: snr, duty, multiplex, jitter,
/// matching. Unknown names and empty value lists are ParseErrors.
RunArtifacts run_sweep(const std::filesystem::path& config_path, const std::string& parameter,
                       const std::vector<std::string>& values, const Options& options);

}  // namespace qcsim::harness
