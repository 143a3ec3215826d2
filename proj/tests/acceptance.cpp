// Acceptance suite: one check per release criterion, each printed as a
// [PASS]/[FAIL] line. Exits nonzero if any criterion fails.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcsim/awg.hpp"
#include "qcsim/discriminator.hpp"
#include "qcsim/errors.hpp"
#include "qcsim/fdma.hpp"
#include "qcsim/power.hpp"
#include "qcsim/readout.hpp"
#include "qcsim/scenario.hpp"
#include "qcsim/sequencer.hpp"
#include "qcsim/signal.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qcsim;

namespace {

int g_failures = 0;

void run_criterion(int number, const std::string& title, const std::function<void()>& body) {
  try {
    body();
    std::cout << "[PASS] criterion " << number << ": " << title << '\n';
  } catch (const std::exception& e) {
    ++g_failures;
    std::cout << "[FAIL] criterion " << number << ": " << title << " -- " << e.what() << '\n';
  }
}

void expect(bool condition, const std::string& detail) {
  if (!condition) throw std::runtime_error(detail);
}

void expect_near(double actual, double expected, double tol, const std::string& what) {
  if (!(std::abs(actual - expected) <= tol)) {
    std::ostringstream msg;
    msg << what << ": expected " << expected << " +/- " << tol << ", got " << actual;
    throw std::runtime_error(msg.str());
  }
}

const fs::path kScenarioDir = QCSIM_SCENARIO_DIR;
const std::string kCli = QCSIM_CLI_PATH;

fs::path work_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("qcsim_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Independent Friis evaluator (linear domain) for criterion 3.
double friis_oracle_db(const readout::ReadoutCascade& cascade) {
  double f = std::pow(10.0, cascade.stages[0].nf_db / 10.0);
  double g = std::pow(10.0, cascade.stages[0].gain_db / 10.0);
  for (std::size_t i = 1; i < cascade.stages.size(); ++i) {
    f += (std::pow(10.0, cascade.stages[i].nf_db / 10.0) - 1.0) / g;
    g *= std::pow(10.0, cascade.stages[i].gain_db / 10.0);
  }
  return 10.0 * std::log10(f);
}

// Independent exhaustive window enumerator for criterion 6.
disc::Window enumerate_best_window(const disc::CalibrationData& cal) {
  double s_floor = std::numeric_limits<double>::infinity();
  for (double v : cal.s) {
    if (v > 0.0 && v < s_floor) s_floor = v;
  }
  if (!std::isfinite(s_floor)) s_floor = 1.0;
  disc::Window best{0, 0};
  double best_snr = -1.0;
  for (int a = 0; a < cal.n_bins; ++a) {
    for (int b = a; b < cal.n_bins; ++b) {
      double delta = 0.0;
      double var = 0.0;
      for (int k = a; k <= b; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double sk = cal.s[i] > 0.0 ? cal.s[i] : s_floor;
        const double w = (cal.mu1[i] - cal.mu0[i]) / (sk * sk);
        delta += w * (cal.mu1[i] - cal.mu0[i]);
        var += w * w * cal.s[i] * cal.s[i];
      }
      delta = std::abs(delta);
      const double snr = var > 0.0 ? delta / std::sqrt(var)
                                   : (delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      const bool better =
          snr > best_snr ||
          (snr == best_snr && (b - a < best.end_bin - best.start_bin ||
                               (b - a == best.end_bin - best.start_bin && a < best.start_bin)));
      if (better) {
        best = {a, b};
        best_snr = snr;
      }
    }
  }
  return best;
}

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) throw std::runtime_error("failed to spawn the CLI");
  return WEXITSTATUS(status);
}

}  // namespace

int main() {
  // Shared baseline run used by criteria 1 and 4.
  json baseline_report;
  try {
    harness::Options opts;
    opts.out_dir = work_dir("baseline");
    baseline_report =
        harness::run_scenario(kScenarioDir / "paper_baseline.json", opts).report;
  } catch (const std::exception& e) {
    std::cout << "[FAIL] baseline scenario did not run: " << e.what() << '\n';
    return 1;
  }

  run_criterion(1, "matching tradeoff (12.91 mW / 1.42 mW, +10 dB, ratio 9.09)", [&] {
    const auto p50 = readout::matching_params(readout::MatchingChoice::Ohm50);
    const auto p500 = readout::matching_params(readout::MatchingChoice::Ohm500);
    expect(p50.dc_power_w == 12.91e-3, "Ohm50 power must be exactly 12.91 mW");
    expect(p500.dc_power_w == 1.42e-3, "Ohm500 power must be exactly 1.42 mW");
    expect_near(p500.gain_db - p50.gain_db, 10.0, 1e-12, "gain delta");
    expect_near(p50.dc_power_w / p500.dc_power_w, 9.09, 0.01, "power ratio");
    const std::string note = baseline_report["cascade"]["matching_note"].get<std::string>();
    expect(note.find("10x") != std::string::npos, "report must note the ~10x power reduction");
    expect_near(baseline_report["cascade"]["matching_power_ratio_50_to_500"].get<double>(), 9.09,
                0.01, "report power ratio");
  });

  run_criterion(2, "three-stage LNA cascade (5.8 GHz within 2%, 88.5 dB; 3x20 = 60 dB)", [&] {
    const auto cmos = readout::matching_params(readout::MatchingChoice::Ohm500);
    expect_near(cmos.gain_db, 29.5, 1e-12, "single-stage gain");
    expect_near(cmos.bw_hz, 11.5e9, 1e-3, "single-stage bandwidth");
    expect(cmos.nf_db < 3.0, "single-stage NF must be below 3 dB");

    readout::ReadoutCascade triple{{cmos, cmos, cmos}};
    const double bw = readout::cascade_bandwidth_hz(triple, true);
    expect(std::abs(bw - 5.8e9) / 5.8e9 < 0.02, "triple-stack bandwidth not within 2% of 5.8 GHz");
    expect_near(readout::cascade_gain_db(triple), 88.5, 1e-9, "triple-stack gain");

    readout::AmplifierStage twenty{"alt", 20.0, 3.0, 11.5e9, 0.0, 500.0};
    readout::ReadoutCascade target{{twenty, twenty, twenty}};
    expect(readout::cascade_gain_db(target) == 60.0, "3 x 20 dB must sum to exactly 60 dB");
  });

  run_criterion(3, "Friis equivalence against an independent evaluator (1000 cascades)", [&] {
    testutil::XorShift rng(1003);
    for (int trial = 0; trial < 1000; ++trial) {
      readout::ReadoutCascade cascade;
      const int n = 1 + static_cast<int>(rng.next() % 5);
      for (int i = 0; i < n; ++i) {
        cascade.stages.push_back({"s" + std::to_string(i), rng.uniform(-5.0, 40.0),
                                  rng.uniform(0.0, 10.0), rng.uniform(1e9, 12e9), 0.0, 50.0});
      }
      const double impl = readout::cascade_nf_db(cascade);
      const double oracle = friis_oracle_db(cascade);
      expect(std::abs(impl - oracle) < 1e-9, "Friis mismatch beyond 1e-9 dB");
    }
  });

  run_criterion(4, "discriminator power regression (54.6 uW gated, 256 uW ungated)", [&] {
    // The working point comes from the shipped scenario, not from constants
    // baked into the library.
    const auto scenario = harness::Scenario::load(kScenarioDir / "paper_baseline.json");
    const power::BlockPower* disc_block = nullptr;
    for (const auto& b : scenario.power_blocks) {
      if (b.name == "disc0") disc_block = &b;
    }
    expect(disc_block != nullptr, "baseline must configure a disc0 block");
    expect(disc_block->p_leak_w == 0.0, "regression assumes zero leakage");

    bool found = false;
    for (const auto& row : baseline_report["power"]["blocks"]) {
      if (row["name"] != "disc0") continue;
      found = true;
      expect_near(row["duty"].get<double>(), 0.2133, 1e-12, "disc0 duty");
      const double gated = row["avg_w"].get<double>();
      expect(std::abs(gated - 54.6e-6) / 54.6e-6 <= 0.005, "gated power not within 0.5%");
    }
    expect(found, "report must carry a disc0 power row");

    power::ActivityWindow ungated{"disc0", {{0, 2133}}, power::GatingMode::None};
    const double p =
        power::average_power(*disc_block, ungated, scenario.frame_cycles, 100e6);
    expect(p == disc_block->p_dyn_w, "ungated power must equal p_dyn exactly");
    expect(p == 256e-6, "ungated power must be exactly 256 uW as configured");
  });

  run_criterion(5, "fidelity target at separation/noise 6.18 (analytic + 1e6-shot MC)", [&] {
    disc::Plant plant;
    plant.model.f_readout_hz = 6e9;
    plant.model.n_bins = 15;
    plant.model.bin_duration_s = 2e-9;  // one ADC sample per bin
    const double delta = 6.18 / std::sqrt(15.0);
    plant.model.m0_v.assign(15, 0.0);
    plant.model.m1_v.assign(15, delta);
    plant.model.sigma_in_v.assign(15, 1.0);
    plant.cascade.stages = {{"unit", 0.0, 0.0, 11.5e9, 0.0, 50.0}};
    plant.adc.sample_rate_hz = 500e6;
    plant.adc.quantizer = {24, 64.0};

    disc::CalibrationData cal;
    cal.n_bins = 15;
    cal.mu0 = plant.model.m0_v;
    cal.mu1 = plant.model.m1_v;
    cal.s = plant.model.sigma_in_v;
    cal.n_shots0 = cal.n_shots1 = 2;
    const auto d = disc::build_discriminator(cal);

    expect_near(disc::score_snr(cal, d), 6.18, 1e-9, "score SNR");
    const auto analytic = disc::fidelity_analytic(cal, d);
    expect_near(analytic.fidelity, 0.999, 1e-4, "analytic fidelity");

    const auto mc = disc::fidelity_monte_carlo(plant, d, 1000000, 99);
    expect(std::abs(mc.fidelity - 0.999) <= mc.ci_halfwidth,
           "Monte Carlo 95% CI does not bracket 0.999");
  });

  run_criterion(6, "window optimality and matched-filter dominance (100 calibrations)", [&] {
    testutil::XorShift rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
      disc::CalibrationData cal;
      cal.n_bins = 15;
      cal.mu0.resize(15);
      cal.mu1.resize(15);
      cal.s.resize(15);
      cal.n_shots0 = cal.n_shots1 = 2;
      for (std::size_t k = 0; k < 15; ++k) {
        cal.mu0[k] = rng.uniform(-1.0, 1.0);
        cal.mu1[k] = rng.uniform(-1.0, 1.0);
        cal.s[k] = rng.uniform(0.5, 2.0);
      }
      const auto impl = disc::optimal_window(cal);
      const auto oracle = enumerate_best_window(cal);
      expect(impl.start_bin == oracle.start_bin && impl.end_bin == oracle.end_bin,
             "optimal_window disagrees with the enumerator on trial " + std::to_string(trial));

      const auto matched = disc::build_discriminator(cal);
      disc::Discriminator uniform;
      uniform.weights.assign(15, 1.0);
      uniform.window = matched.window;
      uniform.threshold = 0.0;
      const double fid_matched = disc::fidelity_analytic(cal, matched).fidelity;
      const double fid_uniform = disc::fidelity_analytic(cal, uniform).fidelity;
      expect(fid_matched + 1e-12 >= fid_uniform,
             "matched weights scored below uniform weights on trial " + std::to_string(trial));
    }
  });

  run_criterion(7, "DDS accuracy (50 random tuning words; exhaustive wrap law at N=8)", [&] {
    awg::DdsConfig cfg;  // N = 32, 5 GHz
    testutil::XorShift rng(7007);
    int tested = 0;
    while (tested < 50) {
      const std::uint64_t ftw = 1 + rng.next() % ((1ULL << 31) - 1);
      // Skip exact half-bin frequencies where the peak legitimately ties.
      if (ftw % (1ULL << 20) == (1ULL << 19)) continue;
      cfg.ftw = ftw;
      const auto carrier = awg::dds_carrier(cfg, 4096);
      const auto peak = testutil::dominant_fft_bin(carrier.samples);
      const auto expected = static_cast<std::size_t>(
          std::llround(static_cast<double>(ftw) / std::ldexp(1.0, 32) * 4096.0));
      expect(peak == expected,
             "FFT peak bin " + std::to_string(peak) + " != " + std::to_string(expected));
      ++tested;
    }

    awg::DdsConfig small;
    small.acc_width_bits = 8;
    small.sample_clock_hz = 1e6;
    for (std::uint64_t ftw = 0; ftw < 128; ++ftw) {
      small.ftw = ftw;
      const auto phases = awg::dds_phase_sequence(small, 513);
      for (std::size_t k = 0; k < phases.size(); ++k) {
        expect(phases[k] == (k * ftw) % 256, "accumulator wrap law violated");
      }
    }
  });

  run_criterion(8, "sequencer determinism, synchrony and the 1 ppm drift point", [&] {
    const auto prog = seq::parse_program(
        "PULSE ch=0 wave=a amp=1 phase=0 at=100 len=40\n"
        "PULSE ch=1 wave=a amp=1 phase=0 at=100 len=40\n"
        "MEASURE ch=0 at=200 window=50\n"
        "HALT\n");
    seq::ClockTree tree;
    tree.system_clock_hz = 100e6;
    tree.domains = {{"seq", 1, 1},  {"awg0", 50, 1}, {"awg1", 50, 1},
                    {"adc0", 5, 1}, {"disc0", 5, 1}};
    const auto once = seq::compile_timeline(prog, tree);
    const auto twice = seq::compile_timeline(prog, tree);
    std::ostringstream a, b;
    seq::write_timeline_csv(a, once);
    seq::write_timeline_csv(b, twice);
    expect(a.str() == b.str(), "timeline export must be byte-identical across runs");

    std::vector<std::int64_t> start_cycles;
    for (const auto& e : once) {
      if (e.kind == seq::TriggerKind::Start) start_cycles.push_back(e.cycle);
    }
    expect(start_cycles.size() == 2 && start_cycles[0] == 100 && start_cycles[1] == 100,
           "simultaneous pulses must trigger on the same cycle");

    std::vector<seq::DomainCounter> counters;
    for (const auto& d : tree.domains) {
      const double ppm = d.name == "adc0" ? -1.0 : 0.0;
      counters.push_back({d.name, seq::drifted_domain_count(d, 10000000, ppm)});
    }
    const auto status = seq::check_sync(tree, 10000000, counters, 5.0);
    expect(status.max_counter_skew_cycles == 10.0,
           "1 ppm drift over 1e7 cycles must give exactly 10 cycles of skew");
    expect(!status.in_sync, "10 cycles of skew must be out of sync at tolerance 5");
  });

  run_criterion(9, "parity correction (exhaustive) and constant feedback latency", [&] {
    for (int codeword = 0; codeword <= 1; ++codeword) {
      for (int flip = -1; flip < 3; ++flip) {
        int q[3] = {codeword, codeword, codeword};
        if (flip >= 0) q[flip] ^= 1;
        const auto corrections =
            seq::parity_correct(q[0] != q[1], q[1] != q[2], 0, 0, 1);
        for (const auto& c : corrections) {
          q[std::get<seq::PulseInstr>(c).channel] ^= 1;
        }
        expect(q[0] == codeword && q[1] == codeword && q[2] == codeword,
               "single-flip pattern was not corrected");
      }
    }

    std::vector<std::int64_t> latencies;
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      harness::Options opts;
      opts.out_dir = work_dir("feedback_seed" + std::to_string(seed));
      opts.seed_override = seed;
      const auto run =
          harness::run_scenario(kScenarioDir / "feedback_parity.json", opts);
      expect(run.report["feedback"]["constant"].get<bool>(), "latency list must be constant");
      for (const auto& l : run.report["feedback"]["latency_cycles"]) {
        latencies.push_back(l.get<std::int64_t>());
      }
    }
    expect(!latencies.empty(), "feedback scenario must produce corrective pulses");
    for (const auto l : latencies) {
      expect(l == latencies.front(), "feedback latency varies across runs");
    }
  });

  run_criterion(10, "FDMA capacity, overflow error, and 500 random valid plans", [&] {
    const fdma::Band band{4e9, 8e9};
    expect(fdma::capacity(band, 40e6, 10e6) == 80, "capacity(4-8 GHz, 40 MHz, 10 MHz) != 80");
    bool threw = false;
    try {
      fdma::allocate(81, band, 40e6, 10e6);
    } catch (const ValidationError&) {
      threw = true;
    }
    expect(threw, "allocate(81) must report a capacity error");

    testutil::XorShift rng(555);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const double f_lo = rng.uniform(1e9, 6e9);
      const fdma::Band b{f_lo, f_lo + rng.uniform(0.5e9, 4e9)};
      const double bw = rng.uniform(5e6, 400e6);
      const double guard = rng.uniform(0.0, 100e6);
      const int cap = fdma::capacity(b, bw, guard);
      if (cap < 1) continue;
      const int n = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(cap));
      fdma::validate(fdma::allocate(n, b, bw, guard));
      ++checked;
    }
    expect(checked >= 400, "too few non-trivial random plans exercised");
  });

  run_criterion(11, "end-to-end baseline run (exit 0, byte-deterministic, consistent)", [&] {
    const auto out1 = work_dir("cli1");
    const auto out2 = work_dir("cli2");
    const std::string config = (kScenarioDir / "paper_baseline.json").string();
    expect(run_cli("simulate " + config + " --out-dir " + out1.string()) == 0,
           "simulate must exit 0");
    expect(run_cli("simulate " + config + " --out-dir " + out2.string()) == 0,
           "second simulate must exit 0");
    const std::string r1 = slurp(out1 / "report.json");
    const std::string r2 = slurp(out2 / "report.json");
    expect(r1 == r2, "reports must be byte-identical under a fixed seed");
    expect(slurp(out1 / "timeline.csv") == slurp(out2 / "timeline.csv"),
           "timeline export must be byte-identical under a fixed seed");

    const json report = json::parse(r1);
    double block_sum = 0.0;
    for (const auto& row : report["power"]["blocks"]) block_sum += row["avg_w"].get<double>();
    const double total = report["power"]["total_w"].get<double>();
    expect(std::abs(block_sum - total) <= 1e-12 * std::max(1.0, total),
           "power totals must equal the sum of the block rows");
    for (const char* key : {"analytic", "monte_carlo"}) {
      const double fid = report["fidelity"][key].get<double>();
      expect(fid >= 0.0 && fid <= 1.0, "fidelity out of [0, 1]");
    }
    expect(report["sync"]["in_sync"].get<bool>(), "baseline must stay in sync");
  });

  if (g_failures == 0) {
    std::cout << "all 11 criteria passed\n";
    return 0;
  }
  std::cout << g_failures << " criteria failed\n";
  return 1;
}
