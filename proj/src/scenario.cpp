#include "qcsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"
#include "qcsim/signal.hpp"

namespace qcsim::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModule = "cli-harness";

// Stream-id spaces. Monte Carlo fidelity owns [0, 2 * n_shots); everything
// else lives above 2^32 so streams never collide.
constexpr std::uint64_t kStreamCal0 = 1ULL << 32;
constexpr std::uint64_t kStreamCal1 = 2ULL << 32;
constexpr std::uint64_t kStreamMeasure = 3ULL << 32;
constexpr std::uint64_t kStreamRecal = 4ULL << 32;
constexpr std::uint64_t kStreamJitter = 5ULL << 32;
constexpr std::uint64_t kRecalSpan = 1ULL << 21;
constexpr std::uint64_t kRecalStateSpan = 1ULL << 20;

json parse_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + " '" + path.string() + "': " + e.what());
  }
}

const json& require_key(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) {
    throw ParseError("config: missing key '" + key + "' in " + context);
  }
  return j.at(key);
}

double get_num(const json& j, const std::string& key, const std::string& context) {
  const json& v = require_key(j, key, context);
  if (!v.is_number()) throw ParseError("config: '" + key + "' in " + context + " must be a number");
  return v.get<double>();
}

double get_num_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ParseError("config: '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::int64_t get_int_or(const json& j, const std::string& key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::int64_t>();
}

std::string read_text_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

readout::AmplifierStage stage_from_json(const json& j) {
  readout::AmplifierStage s;
  s.name = j.value("name", "stage");
  s.gain_db = get_num(j, "gain_db", "cascade stage '" + s.name + "'");
  s.nf_db = get_num(j, "nf_db", "cascade stage '" + s.name + "'");
  s.bw_hz = get_num(j, "bw_hz", "cascade stage '" + s.name + "'");
  s.dc_power_w = get_num_or(j, "dc_power_w", 0.0);
  s.in_impedance_ohm = get_num_or(j, "in_impedance_ohm", 50.0);
  return s;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

namespace {

Scenario load_scenario_impl(const fs::path& config_path) {
  const json j = parse_json_file(config_path, "config file");
  const fs::path base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");

  Scenario sc;
  sc.name = j.value("name", config_path.stem().string());
  if (!j.contains("seed")) {
    throw ParseError("config: 'seed' is required; runs must be reproducible");
  }
  sc.seed = j.at("seed").get<std::uint64_t>();

  // Clock tree.
  if (j.contains("clock_tree")) {
    const json& ct = j.at("clock_tree");
    sc.clock_tree.system_clock_hz = get_num_or(ct, "system_clock_hz", 100e6);
    sc.clock_tree.domains.clear();
    for (const json& dj : require_key(ct, "domains", "clock_tree")) {
      seq::ClockDomain d;
      d.name = require_key(dj, "name", "clock domain").get<std::string>();
      d.num = get_int_or(dj, "num", 1);
      d.den = get_int_or(dj, "den", 1);
      sc.clock_tree.domains.push_back(std::move(d));
    }
  } else {
    sc.clock_tree = seq::default_clock_tree();
  }
  seq::validate(sc.clock_tree);

  // Program and waveforms.
  const std::string program_file = require_key(j, "program", "config").get<std::string>();
  sc.program = seq::parse_program(read_text_file(base / program_file, "program file"));
  const std::string wave_file = require_key(j, "waveforms", "config").get<std::string>();
  {
    std::ifstream in(base / wave_file);
    if (!in) throw ParseError("cannot open waveform file '" + (base / wave_file).string() + "'");
    sc.waveforms = awg::load_waveform_csv(in);
  }
  for (const auto& instr : sc.program.instructions) {
    if (const auto* p = std::get_if<seq::PulseInstr>(&instr)) {
      if (!sc.waveforms.contains(p->wave_id)) {
        throw ValidationError(kModule, "program references wave '" + p->wave_id +
                                           "' missing from the waveform memory");
      }
    }
  }

  // AWG.
  if (j.contains("awg")) {
    const json& aj = j.at("awg");
    sc.dds.acc_width_bits = static_cast<int>(get_int_or(aj, "acc_width_bits", 32));
    sc.dds.sample_clock_hz = get_num_or(aj, "sample_clock_hz", 5e9);
    if (aj.contains("channel_carriers_hz")) {
      sc.channel_carriers_hz = aj.at("channel_carriers_hz").get<std::vector<double>>();
    }
    sc.channel_amplitude_v = get_num_or(aj, "channel_amplitude_v", 20e-3);
    if (aj.contains("lo_comparison")) {
      const json& lj = aj.at("lo_comparison");
      awg::LoSpec lo;
      lo.lo_freq_hz = get_num_or(lj, "lo_freq_hz", 1e9);
      lo.phase_jitter_rms_rad = get_num(lj, "phase_jitter_rms_rad", "lo_comparison");
      sc.lo_comparison = lo;
      sc.lo_comparison_samples =
          static_cast<std::size_t>(get_int_or(lj, "n_samples", 200000));
    }
  }
  if (sc.channel_carriers_hz.empty()) sc.channel_carriers_hz = {1e9};
  awg::validate(sc.dds);

  // Qubit model.
  if (j.contains("qubit_model") && !j.at("qubit_model").value("use_default", false)) {
    const json& qj = j.at("qubit_model");
    sc.qubit_model.f_readout_hz = get_num_or(qj, "f_readout_hz", 6e9);
    sc.qubit_model.n_bins = static_cast<int>(get_int_or(qj, "n_bins", 15));
    sc.qubit_model.bin_duration_s = get_num(qj, "bin_duration_s", "qubit_model");
    sc.qubit_model.m0_v = require_key(qj, "m0_v", "qubit_model").get<std::vector<double>>();
    sc.qubit_model.m1_v = require_key(qj, "m1_v", "qubit_model").get<std::vector<double>>();
    sc.qubit_model.sigma_in_v =
        require_key(qj, "sigma_in_v", "qubit_model").get<std::vector<double>>();
  } else {
    sc.qubit_model = readout::default_qubit_model();
  }
  readout::validate(sc.qubit_model);

  // Cascade.
  const json& cj = require_key(j, "cascade", "config");
  if (cj.contains("stages")) {
    for (const json& sj : cj.at("stages")) sc.cascade.stages.push_back(stage_from_json(sj));
    sc.n_front_stages = static_cast<int>(sc.cascade.stages.size());
  } else {
    for (const json& sj : cj.value("front_stages", json::array())) {
      auto stage = stage_from_json(sj);
      sc.cascade_assumptions.push_back("front-end stage '" + stage.name +
                                       "' uses configured values, not characterized ones");
      sc.cascade.stages.push_back(std::move(stage));
    }
    sc.n_front_stages = static_cast<int>(sc.cascade.stages.size());
    sc.matching = readout::matching_choice_from_string(cj.value("matching", "Ohm500"));
    sc.n_cmos_stages = static_cast<int>(get_int_or(cj, "n_cmos_stages", 3));
    for (int i = 0; i < sc.n_cmos_stages; ++i) {
      auto stage = readout::matching_params(sc.matching);
      stage.name += "_" + std::to_string(i);
      sc.cascade.stages.push_back(std::move(stage));
    }
    for (const json& sj : cj.value("back_stages", json::array())) {
      auto stage = stage_from_json(sj);
      sc.cascade_assumptions.push_back("back-end stage '" + stage.name +
                                       "' uses configured values, not characterized ones");
      sc.cascade.stages.push_back(std::move(stage));
    }
  }
  readout::validate(sc.cascade);

  // ADC.
  if (j.contains("adc")) {
    const json& aj = j.at("adc");
    sc.adc.sample_rate_hz = get_num_or(aj, "sample_rate_hz", 500e6);
    sc.adc.quantizer.bits = static_cast<int>(get_int_or(aj, "bits", 12));
    sc.adc.quantizer.full_scale_v = get_num_or(aj, "full_scale_v", 1.0);
  }
  readout::validate(sc.adc);

  // Discrimination settings.
  if (j.contains("discriminator")) {
    const json& dj = j.at("discriminator");
    sc.calibration_shots = static_cast<std::size_t>(get_int_or(dj, "calibration_shots", 1000));
    sc.recal_shots = static_cast<std::size_t>(get_int_or(dj, "recal_shots", 500));
    if (dj.contains("import")) {
      sc.discriminator_import = base / dj.at("import").get<std::string>();
    }
  }
  if (j.contains("monte_carlo")) {
    sc.monte_carlo_shots =
        static_cast<std::size_t>(get_int_or(j.at("monte_carlo"), "n_shots", 10000));
  }
  if (j.contains("initial_states")) {
    sc.initial_states = j.at("initial_states").get<std::vector<int>>();
  }

  // Runner knobs.
  sc.run_config.clock_tree = sc.clock_tree;
  if (j.contains("sequencer")) {
    const json& sj = j.at("sequencer");
    sc.run_config.sync_tolerance_cycles = get_num_or(sj, "sync_tolerance_cycles", 1.0);
    sc.run_config.sync_check_interval_cycles =
        get_int_or(sj, "sync_check_interval_cycles", 10000);
    sc.run_config.feedback_latency_cycles = get_int_or(sj, "feedback_latency_cycles", 16);
    sc.run_config.correction_len_cycles = get_int_or(sj, "correction_len_cycles", 50);
    if (sj.contains("drift_ppm")) {
      for (const auto& [domain, ppm] : sj.at("drift_ppm").items()) {
        sc.run_config.drift_ppm[domain] = ppm.get<double>();
      }
    }
  }

  // Power blocks and gating policy.
  if (j.contains("power")) {
    const json& pj = j.at("power");
    sc.frame_cycles = get_int_or(pj, "frame_cycles", 10000);
    for (const json& bj : require_key(pj, "blocks", "power")) {
      power::BlockPower block;
      block.name = require_key(bj, "name", "power block").get<std::string>();
      block.p_leak_w = get_num_or(bj, "p_leak_w", 0.0);
      block.p_dyn_w = get_num(bj, "p_dyn_w", "power block '" + block.name + "'");
      block.wake_latency_cycles = get_int_or(bj, "wake_latency_cycles", 0);
      block.wake_energy_j = get_num_or(bj, "wake_energy_j", 0.0);
      block.shared_across_qubits = bj.value("shared", true);
      power::GatingPolicyEntry entry;
      entry.mode = power::gating_mode_from_string(bj.value("mode", "ClockGated"));
      entry.pre_wake_margin_cycles = get_int_or(bj, "pre_wake_margin_cycles", 0);
      sc.gating_policy[block.name] = entry;
      sc.power_blocks.push_back(std::move(block));
    }
  }

  // FDMA request.
  if (j.contains("fdma")) {
    const json& fj = j.at("fdma");
    fdma::Band band;
    band.f_lo_hz = get_num_or(fj, "f_lo_hz", 4e9);
    band.f_hi_hz = get_num_or(fj, "f_hi_hz", 8e9);
    sc.fdma_band = band;
    sc.fdma_channel_bw_hz = get_num_or(fj, "channel_bw_hz", 40e6);
    sc.fdma_guard_hz = get_num_or(fj, "guard_hz", 10e6);
    sc.fdma_n_qubits = static_cast<int>(get_int_or(fj, "n_qubits", 1));
    sc.fdma_rolloff_exponent = get_num_or(fj, "rolloff_exponent", 2.0);
    sc.multiplex_ratio = static_cast<int>(get_int_or(fj, "multiplex_ratio", sc.fdma_n_qubits));
  }
  if (sc.multiplex_ratio < 1) sc.multiplex_ratio = 1;

  return sc;
}

}  // namespace

Scenario Scenario::load(const fs::path& config_path) {
  try {
    return load_scenario_impl(config_path);
  } catch (const json::exception& e) {
    // Type mismatches surface as parse errors, like any other malformed
    // config content.
    throw ParseError("config file '" + config_path.string() + "': " + e.what());
  }
}

namespace {

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
collect_calibration(const disc::Plant& plant, std::size_t n_shots, std::uint64_t seed,
                    std::uint64_t base0, std::uint64_t base1) {
  std::vector<std::vector<double>> shots0;
  std::vector<std::vector<double>> shots1;
  shots0.reserve(n_shots);
  shots1.reserve(n_shots);
  for (std::size_t i = 0; i < n_shots; ++i) {
    RngStream rng0(seed, base0 + i);
    shots0.push_back(readout::simulate_shot(plant.model, 0, plant.cascade, plant.adc, rng0));
    RngStream rng1(seed, base1 + i);
    shots1.push_back(readout::simulate_shot(plant.model, 1, plant.cascade, plant.adc, rng1));
  }
  return {std::move(shots0), std::move(shots1)};
}

json power_to_json(const power::PowerReport& report) {
  json out;
  out["total_w"] = report.total_avg_w;
  out["total_energy_j"] = report.total_energy_j;
  out["frame_time_s"] = report.frame_time_s;
  out["multiplex_ratio"] = report.multiplex_ratio;
  out["per_qubit_w"] = report.per_qubit_w;
  json rows = json::array();
  for (const auto& row : report.blocks) {
    rows.push_back({{"name", row.name},
                    {"mode", power::to_string(row.mode)},
                    {"duty", row.duty},
                    {"avg_w", row.avg_w},
                    {"energy_j", row.energy_j},
                    {"on_time_s", row.on_time_s},
                    {"wakes", row.wake_count},
                    {"shared", row.shared_across_qubits}});
  }
  out["blocks"] = rows;
  out["caveats"] = report.caveats;
  return out;
}

json window_to_json(const disc::Window& w) {
  return {{"start_bin", w.start_bin}, {"end_bin", w.end_bin}};
}

json fdma_to_json(const Scenario& sc) {
  json out;
  if (!sc.fdma_band) return out;
  const int cap = fdma::capacity(*sc.fdma_band, sc.fdma_channel_bw_hz, sc.fdma_guard_hz);
  out["capacity"] = cap;
  out["channel_bw_hz"] = sc.fdma_channel_bw_hz;
  out["guard_hz"] = sc.fdma_guard_hz;
  out["band"] = {{"f_lo_hz", sc.fdma_band->f_lo_hz}, {"f_hi_hz", sc.fdma_band->f_hi_hz}};
  const auto plan =
      fdma::allocate(sc.fdma_n_qubits, *sc.fdma_band, sc.fdma_channel_bw_hz, sc.fdma_guard_hz);
  json channels = json::array();
  for (const auto& [qubit, center] : plan.assignments) {
    channels.push_back({{"qubit", qubit}, {"center_hz", center}});
  }
  out["channels"] = channels;
  if (plan.assignments.size() > 1) {
    const auto xt = fdma::crosstalk_db(plan, sc.fdma_rolloff_exponent);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < xt.size(); ++i) worst = std::max(worst, xt[i][i + 1]);
    out["max_adjacent_crosstalk_db"] = worst;
  }
  out["warning"] =
      "FDMA can be inefficient for architectures with cross-resonant gates; evaluate per system";
  return out;
}

std::string fsm_path_string(const std::vector<seq::FsmState>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += "->";
    out += seq::to_string(path[i]);
  }
  return out;
}

struct LoadedRun {
  Scenario scenario;
  disc::Plant plant;
};

LoadedRun load_run(const fs::path& config_path, const Options& options) {
  Scenario sc = Scenario::load(config_path);
  if (options.seed_override) sc.seed = *options.seed_override;
  disc::Plant plant{sc.qubit_model, sc.cascade, sc.adc};
  return {std::move(sc), std::move(plant)};
}

void write_report_file(const fs::path& path, const json& report) {
  auto out = open_out(path);
  out << report.dump(2) << '\n';
}

}  // namespace

RunArtifacts run_scenario(const fs::path& config_path, const Options& options) {
  auto [sc, plant] = load_run(config_path, options);
  fs::create_directories(options.out_dir);

  // Calibrate, then decide the discriminator (import wins when configured).
  auto [shots0, shots1] =
      collect_calibration(plant, sc.calibration_shots, sc.seed, kStreamCal0, kStreamCal1);
  disc::CalibrationData cal = disc::calibrate(shots0, shots1);
  disc::Discriminator d;
  if (sc.discriminator_import) {
    std::ifstream in(*sc.discriminator_import);
    if (!in) {
      throw ParseError("cannot open discriminator file '" + sc.discriminator_import->string() +
                       "'");
    }
    d = disc::read_discriminator_csv(in);
  } else {
    d = disc::build_discriminator(cal);
  }

  {
    auto out = open_out(options.out_dir / "calibration.csv");
    disc::write_calibration_csv(out, shots0, shots1);
  }

  // Execute the program against the plant.
  seq::RunConfig rc = sc.run_config;
  std::size_t recal_runs = 0;
  rc.measure = [&](int channel, std::size_t index) {
    const int state = (channel >= 0 && static_cast<std::size_t>(channel) < sc.initial_states.size())
                          ? sc.initial_states[static_cast<std::size_t>(channel)]
                          : 0;
    RngStream rng(sc.seed, kStreamMeasure + index);
    const auto x = readout::simulate_shot(sc.qubit_model, state, sc.cascade, sc.adc, rng);
    return disc::discriminate(disc::mac_score(x, d), d.threshold);
  };
  rc.recal = [&](std::size_t r) {
    auto [s0, s1] = collect_calibration(plant, sc.recal_shots, sc.seed,
                                        kStreamRecal + r * kRecalSpan,
                                        kStreamRecal + r * kRecalSpan + kRecalStateSpan);
    cal = disc::calibrate(s0, s1);
    d = disc::build_discriminator(cal);
    ++recal_runs;
  };
  const seq::ExecutionTrace trace = seq::run_program(sc.program, rc);

  {
    auto out = open_out(options.out_dir / "timeline.csv");
    seq::write_timeline_csv(out, trace.events);
  }
  {
    auto out = open_out(options.out_dir / "discriminator.csv");
    disc::write_discriminator_csv(out, d);
  }

  // Power accounting over the executed timeline.
  const auto activities =
      power::schedule_gating(trace.events, sc.gating_policy, sc.power_blocks, sc.frame_cycles);
  const auto power_report = power::build_report(sc.power_blocks, activities, sc.frame_cycles,
                                                sc.clock_tree.system_clock_hz, sc.multiplex_ratio);
  {
    auto out = open_out(options.out_dir / "power.csv");
    power::write_report_csv(out, power_report);
  }

  // Fidelity, both routes.
  const auto fa = disc::fidelity_analytic(cal, d);
  const auto fmc = disc::fidelity_monte_carlo(plant, d, sc.monte_carlo_shots, sc.seed);

  // Waveform preview for the first pulse, plus the LO-vs-DDS comparison.
  json awg_json;
  for (const auto& instr : sc.program.instructions) {
    if (const auto* p = std::get_if<seq::PulseInstr>(&instr)) {
      awg::DdsConfig dds = sc.dds;
      const auto ch = static_cast<std::size_t>(p->channel);
      const double carrier = ch < sc.channel_carriers_hz.size() ? sc.channel_carriers_hz[ch]
                                                                : sc.channel_carriers_hz.front();
      dds.ftw = awg::ftw_for(carrier, dds);
      const auto pulse = awg::play_pulse(sc.waveforms, p->wave_id, dds,
                                         p->amp_scale * sc.channel_amplitude_v, p->phase_rad);
      auto out = open_out(options.out_dir / "pulse_preview.csv");
      signal::write_trace_csv(out, pulse);
      awg_json["preview_wave"] = p->wave_id;
      awg_json["preview_channel"] = p->channel;
      awg_json["dds_frequency_hz"] = awg::dds_frequency_hz(dds);
      awg_json["ftw"] = dds.ftw;
      double peak = 0.0;
      for (const auto& s : pulse.samples) peak = std::max(peak, std::abs(s));
      awg_json["peak_amplitude_v"] = peak;
      break;
    }
  }
  if (sc.lo_comparison) {
    const auto tone = signal::synth_tone(100e6, 1.0, 0.0, sc.dds.sample_clock_hz,
                                         sc.lo_comparison_samples);
    RngStream rng(sc.seed, kStreamJitter);
    const auto mix = awg::lo_upconvert_and_snr_penalty(tone, *sc.lo_comparison, rng);
    awg_json["lo_phase_jitter_rms_rad"] = sc.lo_comparison->phase_jitter_rms_rad;
    awg_json["lo_snr_penalty_db"] = mix.snr_penalty_db;
  }

  // FDMA plan.
  json fdma_json = fdma_to_json(sc);
  if (sc.fdma_band) {
    const auto plan =
        fdma::allocate(sc.fdma_n_qubits, *sc.fdma_band, sc.fdma_channel_bw_hz, sc.fdma_guard_hz);
    auto out = open_out(options.out_dir / "fdma_plan.csv");
    fdma::write_plan_csv(out, plan);
  }

  // Cascade summary with the matching tradeoff.
  json cascade_json;
  cascade_json["gain_db"] = readout::cascade_gain_db(sc.cascade);
  cascade_json["nf_db"] = readout::cascade_nf_db(sc.cascade);
  cascade_json["bandwidth_min_hz"] = readout::cascade_bandwidth_hz(sc.cascade, false);
  cascade_json["bandwidth_single_pole_hz"] = readout::cascade_bandwidth_hz(sc.cascade, true);
  cascade_json["matching"] = readout::to_string(sc.matching);
  {
    const auto p50 = readout::matching_params(readout::MatchingChoice::Ohm50);
    const auto p500 = readout::matching_params(readout::MatchingChoice::Ohm500);
    cascade_json["matching_power_ratio_50_to_500"] = p50.dc_power_w / p500.dc_power_w;
    cascade_json["matching_gain_delta_db"] = p500.gain_db - p50.gain_db;
    cascade_json["matching_note"] =
        "500 ohm input matching: +10 dB gain and ~10x lower LNA power than the 50 ohm design";
  }
  cascade_json["assumptions"] = sc.cascade_assumptions;

  // Assemble the report.
  json report;
  report["scenario"] = sc.name;
  report["seed"] = sc.seed;
  report["fidelity"] = {
      {"analytic", fa.fidelity},
      {"monte_carlo", fmc.fidelity},
      {"mc_ci_halfwidth", fmc.ci_halfwidth},
      {"mc_shots_per_state", sc.monte_carlo_shots},
  };
  report["window"] = window_to_json(d.window);
  report["threshold"] = d.threshold;
  report["sync"] = {
      {"in_sync", trace.sync.in_sync},
      {"max_skew_cycles", trace.sync.max_counter_skew_cycles},
      {"last_check_cycle", trace.sync.last_check_cycle},
  };
  report["feedback"] = {
      {"latency_cycles", trace.feedback_latencies_cycles},
      {"constant",
       std::all_of(trace.feedback_latencies_cycles.begin(),
                   trace.feedback_latencies_cycles.end(),
                   [&](std::int64_t v) { return v == trace.feedback_latencies_cycles.front(); }) ||
           trace.feedback_latencies_cycles.empty()},
      {"n_measurements", trace.n_measurements},
      {"measured_bits", trace.measured_bits},
  };
  report["sequencer"] = {
      {"fsm_path", fsm_path_string(trace.fsm_path)},
      {"final_state", seq::to_string(trace.final_state.fsm)},
      {"recal_runs", recal_runs},
  };
  report["power"] = power_to_json(power_report);
  report["fdma"] = fdma_json;
  report["cascade"] = cascade_json;
  report["awg"] = awg_json;

  double block_sum = 0.0;
  for (const auto& row : power_report.blocks) block_sum += row.avg_w;
  report["checks"] = {
      {"power_total_matches_blocks",
       std::abs(block_sum - power_report.total_avg_w) <=
           1e-12 * std::max(1.0, std::abs(power_report.total_avg_w))},
      {"fidelity_in_range", fa.fidelity >= 0.0 && fa.fidelity <= 1.0 && fmc.fidelity >= 0.0 &&
                                fmc.fidelity <= 1.0},
      {"in_sync", trace.sync.in_sync},
  };

  RunArtifacts artifacts;
  artifacts.report = std::move(report);
  artifacts.report_path = options.out_dir / "report.json";
  write_report_file(artifacts.report_path, artifacts.report);
  return artifacts;
}

RunArtifacts run_calibrate(const fs::path& config_path, const Options& options) {
  auto [sc, plant] = load_run(config_path, options);
  fs::create_directories(options.out_dir);

  auto [shots0, shots1] =
      collect_calibration(plant, sc.calibration_shots, sc.seed, kStreamCal0, kStreamCal1);
  const auto cal = disc::calibrate(shots0, shots1);
  const auto d = disc::build_discriminator(cal);
  {
    auto out = open_out(options.out_dir / "calibration.csv");
    disc::write_calibration_csv(out, shots0, shots1);
  }
  {
    auto out = open_out(options.out_dir / "discriminator.csv");
    disc::write_discriminator_csv(out, d);
  }
  {
    std::vector<std::vector<double>> all_shots = shots0;
    all_shots.insert(all_shots.end(), shots1.begin(), shots1.end());
    std::vector<int> states(shots0.size(), 0);
    states.insert(states.end(), shots1.size(), 1);
    auto out = open_out(options.out_dir / "shots.csv");
    readout::write_shots_csv(out, all_shots, states);
  }

  json report;
  report["scenario"] = sc.name;
  report["seed"] = sc.seed;
  report["window"] = window_to_json(d.window);
  report["threshold"] = d.threshold;
  report["fidelity_analytic"] = disc::fidelity_analytic(cal, d).fidelity;
  report["calibration_shots_per_state"] = sc.calibration_shots;

  RunArtifacts artifacts;
  artifacts.report = std::move(report);
  artifacts.report_path = options.out_dir / "calibrate.json";
  write_report_file(artifacts.report_path, artifacts.report);
  return artifacts;
}

RunArtifacts run_power_report(const fs::path& config_path, const Options& options) {
  auto [sc, plant] = load_run(config_path, options);
  fs::create_directories(options.out_dir);

  const auto timeline = seq::compile_timeline(sc.program, sc.clock_tree);
  const auto activities =
      power::schedule_gating(timeline, sc.gating_policy, sc.power_blocks, sc.frame_cycles);
  const auto report = power::build_report(sc.power_blocks, activities, sc.frame_cycles,
                                          sc.clock_tree.system_clock_hz, sc.multiplex_ratio);
  {
    auto out = open_out(options.out_dir / "power.csv");
    power::write_report_csv(out, report);
  }

  RunArtifacts artifacts;
  artifacts.report = power_to_json(report);
  artifacts.report["scenario"] = sc.name;
  artifacts.report_path = options.out_dir / "power.json";
  write_report_file(artifacts.report_path, artifacts.report);
  return artifacts;
}

RunArtifacts run_fdma_plan(const fs::path& config_path, const Options& options) {
  auto [sc, plant] = load_run(config_path, options);
  fs::create_directories(options.out_dir);
  if (!sc.fdma_band) {
    throw ParseError("config has no 'fdma' section to plan from");
  }
  const auto plan =
      fdma::allocate(sc.fdma_n_qubits, *sc.fdma_band, sc.fdma_channel_bw_hz, sc.fdma_guard_hz);
  {
    auto out = open_out(options.out_dir / "fdma_plan.csv");
    fdma::write_plan_csv(out, plan);
  }
  RunArtifacts artifacts;
  artifacts.report = fdma_to_json(sc);
  artifacts.report["scenario"] = sc.name;
  artifacts.report_path = options.out_dir / "fdma.json";
  write_report_file(artifacts.report_path, artifacts.report);
  return artifacts;
}

RunArtifacts run_sweep(const fs::path& config_path, const std::string& parameter,
                       const std::vector<std::string>& values, const Options& options) {
  static const std::set<std::string> kKnown = {"snr", "duty", "multiplex", "jitter", "matching"};
  if (!kKnown.count(parameter)) {
    throw ParseError("unknown sweep parameter '" + parameter +
                     "'; valid names: snr, duty, multiplex, jitter, matching");
  }
  if (values.empty()) throw ParseError("sweep requires a non-empty value list");

  auto [sc, plant] = load_run(config_path, options);
  fs::create_directories(options.out_dir);

  // Baseline calibration, discriminator and power.
  auto [shots0, shots1] =
      collect_calibration(plant, sc.calibration_shots, sc.seed, kStreamCal0, kStreamCal1);
  const auto cal = disc::calibrate(shots0, shots1);
  const auto d = disc::build_discriminator(cal);
  const double base_snr = disc::score_snr(cal, d);
  const double base_fidelity = disc::fidelity_analytic(cal, d).fidelity;

  const auto timeline = seq::compile_timeline(sc.program, sc.clock_tree);
  const auto activities =
      power::schedule_gating(timeline, sc.gating_policy, sc.power_blocks, sc.frame_cycles);
  const auto base_power = power::build_report(sc.power_blocks, activities, sc.frame_cycles,
                                              sc.clock_tree.system_clock_hz, sc.multiplex_ratio);

  struct Row {
    std::string value;
    double fidelity;
    double power_w;
  };
  std::vector<Row> rows;

  for (const std::string& value : values) {
    Row row{value, base_fidelity, base_power.total_avg_w};
    if (parameter == "snr") {
      const double target = csv::parse_double(value, "snr value");
      if (!(target >= 0.0)) throw ParseError("snr values must be non-negative");
      if (!std::isfinite(base_snr) || base_snr <= 0.0) {
        throw ValidationError(kModule, "snr sweep needs a noisy, separated baseline calibration");
      }
      disc::CalibrationData scaled = cal;
      const double factor = target / base_snr;
      for (int k = 0; k < scaled.n_bins; ++k) {
        const auto i = static_cast<std::size_t>(k);
        scaled.mu1[i] = scaled.mu0[i] + (cal.mu1[i] - cal.mu0[i]) * factor;
      }
      if (target == 0.0) {
        row.fidelity = 0.5;
      } else {
        const auto d2 = disc::build_discriminator(scaled);
        row.fidelity = disc::fidelity_analytic(scaled, d2).fidelity;
      }
    } else if (parameter == "duty") {
      const double duty = csv::parse_double(value, "duty value");
      if (duty < 0.0 || duty > 1.0) throw ParseError("duty values must lie in [0, 1]");
      const auto it = std::find_if(sc.power_blocks.begin(), sc.power_blocks.end(),
                                   [](const power::BlockPower& b) {
                                     return b.name.rfind("disc", 0) == 0;
                                   });
      if (it == sc.power_blocks.end()) {
        throw ParseError("duty sweep requires a power block named 'disc*'");
      }
      double total = 0.0;
      for (const auto& r : base_power.blocks) {
        total += r.name == it->name ? it->p_leak_w + it->p_dyn_w * duty : r.avg_w;
      }
      row.power_w = total;
    } else if (parameter == "multiplex") {
      const auto m = static_cast<int>(csv::parse_int(value, "multiplex value"));
      row.power_w = power::per_qubit_budget(base_power, m);
    } else if (parameter == "jitter") {
      const double jitter = csv::parse_double(value, "jitter value");
      if (jitter < 0.0) throw ParseError("jitter values must be non-negative");
      const auto tone =
          signal::synth_tone(100e6, 1.0, 0.0, sc.dds.sample_clock_hz, sc.lo_comparison_samples);
      awg::LoSpec lo{1e9, jitter};
      RngStream rng(sc.seed, kStreamJitter);
      const auto mix = awg::lo_upconvert_and_snr_penalty(tone, lo, rng);
      const double snr_eff = base_snr * std::pow(10.0, -mix.snr_penalty_db / 20.0);
      row.fidelity = 1.0 - disc::gaussian_tail(snr_eff / 2.0);
    } else {  // matching
      const auto choice = readout::matching_choice_from_string(value);
      if (sc.n_cmos_stages < 1) {
        throw ParseError("matching sweep requires a cascade built with n_cmos_stages >= 1");
      }
      readout::ReadoutCascade swapped;
      swapped.stages.assign(sc.cascade.stages.begin(),
                            sc.cascade.stages.begin() + sc.n_front_stages);
      double cmos_power = 0.0;
      for (int i = 0; i < sc.n_cmos_stages; ++i) {
        auto stage = readout::matching_params(choice);
        cmos_power += stage.dc_power_w;
        swapped.stages.push_back(std::move(stage));
      }
      swapped.stages.insert(swapped.stages.end(),
                            sc.cascade.stages.begin() + sc.n_front_stages + sc.n_cmos_stages,
                            sc.cascade.stages.end());
      disc::Plant plant2{sc.qubit_model, swapped, sc.adc};
      auto [s0, s1] =
          collect_calibration(plant2, sc.calibration_shots, sc.seed, kStreamCal0, kStreamCal1);
      const auto cal2 = disc::calibrate(s0, s1);
      const auto d2 = disc::build_discriminator(cal2);
      row.fidelity = disc::fidelity_analytic(cal2, d2).fidelity;
      row.power_w = cmos_power;
    }
    rows.push_back(std::move(row));
  }

  {
    auto out = open_out(options.out_dir / "sweep.csv");
    out << "param,value,fidelity,power_w\n";
    for (const auto& row : rows) {
      out << parameter << ',' << row.value << ',' << csv::format_double(row.fidelity) << ','
          << csv::format_double(row.power_w) << '\n';
    }
  }

  json report;
  report["scenario"] = sc.name;
  report["parameter"] = parameter;
  json jrows = json::array();
  for (const auto& row : rows) {
    jrows.push_back({{"value", row.value}, {"fidelity", row.fidelity}, {"power_w", row.power_w}});
  }
  report["rows"] = jrows;

  RunArtifacts artifacts;
  artifacts.report = std::move(report);
  artifacts.report_path = options.out_dir / "sweep.json";
  write_report_file(artifacts.report_path, artifacts.report);
  return artifacts;
}

}  // namespace qcsim::harness
