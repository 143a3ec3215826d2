#include "qcsim/readout.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::readout {

namespace {
constexpr const char* kModule = "readout";
}

void validate(const QubitReadoutModel& model) {
  if (model.f_readout_hz < 4e9 || model.f_readout_hz > 8e9) {
    throw ValidationError(kModule, "readout frequency must lie in the 4-8 GHz band");
  }
  if (model.n_bins < 1) throw ValidationError(kModule, "n_bins must be at least 1");
  if (!(model.bin_duration_s > 0.0)) {
    throw ValidationError(kModule, "bin duration must be positive");
  }
  const auto n = static_cast<std::size_t>(model.n_bins);
  if (model.m0_v.size() != n || model.m1_v.size() != n || model.sigma_in_v.size() != n) {
    throw ValidationError(kModule, "trajectory and sigma arrays must have n_bins entries");
  }
  for (double s : model.sigma_in_v) {
    if (!(s >= 0.0)) throw ValidationError(kModule, "sigma_in must be non-negative");
  }
}

QubitReadoutModel default_qubit_model() {
  QubitReadoutModel model;
  model.f_readout_hz = 6e9;
  model.n_bins = 15;
  model.bin_duration_s = 1e-7;
  model.m0_v.resize(model.n_bins);
  model.m1_v.resize(model.n_bins);
  model.sigma_in_v.assign(model.n_bins, 0.5e-6);
  // Resonator response settling toward state-dependent levels, rising with
  // tau_r and relaxing with tau_f. Microvolt scale at the chain input.
  const double total = model.n_bins * model.bin_duration_s;
  const double tau_r = 0.18 * total;
  const double tau_f = 2.5 * total;
  for (int k = 0; k < model.n_bins; ++k) {
    const double t = (k + 0.5) * model.bin_duration_s;
    const double shape = (1.0 - std::exp(-t / tau_r)) * std::exp(-t / tau_f);
    model.m0_v[k] = 1.0e-6 * shape;
    model.m1_v[k] = 3.6e-6 * shape;
  }
  return model;
}

void validate(const ReadoutCascade& cascade) {
  if (cascade.stages.empty()) throw ValidationError(kModule, "cascade must be non-empty");
  for (const auto& s : cascade.stages) {
    if (!(s.bw_hz > 0.0)) {
      throw ValidationError(kModule, "stage '" + s.name + "' bandwidth must be positive");
    }
    if (s.nf_db < 0.0) {
      throw ValidationError(kModule, "stage '" + s.name + "' noise figure must be non-negative");
    }
    if (s.dc_power_w < 0.0) {
      throw ValidationError(kModule, "stage '" + s.name + "' DC power must be non-negative");
    }
    if (!(s.in_impedance_ohm > 0.0)) {
      throw ValidationError(kModule, "stage '" + s.name + "' impedance must be positive");
    }
  }
}

double cascade_gain_db(const ReadoutCascade& cascade) {
  validate(cascade);
  double total = 0.0;
  for (const auto& s : cascade.stages) total += s.gain_db;
  return total;
}

double cascade_nf_db(const ReadoutCascade& cascade) {
  validate(cascade);
  double f_total = 0.0;
  double gain_product = 1.0;
  for (std::size_t i = 0; i < cascade.stages.size(); ++i) {
    const double f_i = signal::db_to_power_ratio(cascade.stages[i].nf_db);
    if (i == 0) {
      f_total = f_i;
    } else {
      f_total += (f_i - 1.0) / gain_product;
    }
    gain_product *= signal::db_to_power_ratio(cascade.stages[i].gain_db);
  }
  return signal::power_ratio_to_db(f_total);
}

double cascade_bandwidth_hz(const ReadoutCascade& cascade, bool identical_single_pole) {
  validate(cascade);
  const std::size_t n = cascade.stages.size();
  if (identical_single_pole && n > 1) {
    bool identical = true;
    for (const auto& s : cascade.stages) {
      if (s.bw_hz != cascade.stages.front().bw_hz) {
        identical = false;
        break;
      }
    }
    if (identical) {
      const double shrink = std::sqrt(std::pow(2.0, 1.0 / static_cast<double>(n)) - 1.0);
      return cascade.stages.front().bw_hz * shrink;
    }
  }
  double bw = cascade.stages.front().bw_hz;
  for (const auto& s : cascade.stages) bw = std::min(bw, s.bw_hz);
  return bw;
}

double cascade_input_noise_power_w(const ReadoutCascade& cascade) {
  const double f_total = signal::db_to_power_ratio(cascade_nf_db(cascade));
  const double bw = cascade_bandwidth_hz(cascade, false);
  return kBoltzmannJPerK * kNoiseReferenceK * bw * (f_total - 1.0);
}

MatchingChoice matching_choice_from_string(const std::string& name) {
  if (name == "Ohm50" || name == "50") return MatchingChoice::Ohm50;
  if (name == "Ohm500" || name == "500") return MatchingChoice::Ohm500;
  throw ParseError("unknown matching choice '" + name + "' (expected Ohm50 or Ohm500)");
}

const char* to_string(MatchingChoice choice) {
  return choice == MatchingChoice::Ohm50 ? "Ohm50" : "Ohm500";
}

AmplifierStage matching_params(MatchingChoice choice) {
  // The characterized single-stage row (29.5 dB, 11.5 GHz, <3 dB NF, 1.42 mW)
  // is the 500-ohm design; moving the match down to 50 ohm costs 10 dB of
  // gain and roughly 10x the drive power.
  AmplifierStage stage;
  stage.bw_hz = 11.5e9;
  stage.nf_db = 2.9;
  if (choice == MatchingChoice::Ohm500) {
    stage.name = "cmos_lna_500";
    stage.gain_db = 29.5;
    stage.dc_power_w = 1.42e-3;
    stage.in_impedance_ohm = 500.0;
  } else {
    stage.name = "cmos_lna_50";
    stage.gain_db = 19.5;
    stage.dc_power_w = 12.91e-3;
    stage.in_impedance_ohm = 50.0;
  }
  return stage;
}

MatchingMetadata matching_metadata(MatchingChoice choice) {
  if (choice == MatchingChoice::Ohm500) return {5300.0, 80, 60};
  return {497.0, 800, 600};
}

void validate(const AdcSpec& adc) {
  if (!(adc.sample_rate_hz > 0.0)) throw ValidationError(kModule, "ADC rate must be positive");
  signal::validate(adc.quantizer);
}

namespace {

struct CascadeNoise {
  double voltage_gain = 1.0;
  double sigma_per_component_v = 0.0;  // input-referred
};

CascadeNoise cascade_noise_model(const ReadoutCascade& cascade) {
  CascadeNoise out;
  out.voltage_gain = signal::db_to_voltage_ratio(cascade_gain_db(cascade));
  const double noise_power_w = cascade_input_noise_power_w(cascade);
  // Power convention matches trace_power_w: P = mean|v|^2 / R, split evenly
  // between the I and Q components.
  const double r = cascade.stages.front().in_impedance_ohm;
  out.sigma_per_component_v = std::sqrt(noise_power_w * r / 2.0);
  return out;
}

}  // namespace

signal::IqTrace amplify_trace(const signal::IqTrace& trace, const ReadoutCascade& cascade,
                              RngStream& rng) {
  signal::validate(trace);
  const CascadeNoise noise = cascade_noise_model(cascade);
  signal::IqTrace out = trace;
  for (auto& s : out.samples) {
    if (noise.sigma_per_component_v > 0.0) {
      s += noise.sigma_per_component_v * rng.next_complex_gaussian();
    }
    s *= noise.voltage_gain;
  }
  return out;
}

std::vector<double> simulate_shot(const QubitReadoutModel& model, int state,
                                  const ReadoutCascade& cascade, const AdcSpec& adc,
                                  RngStream& rng) {
  validate(model);
  validate(adc);
  if (state != 0 && state != 1) throw ValidationError(kModule, "state must be 0 or 1");

  const CascadeNoise noise = cascade_noise_model(cascade);
  const auto& mean = (state == 0) ? model.m0_v : model.m1_v;
  const auto samples_per_bin = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(model.bin_duration_s * adc.sample_rate_hz)));

  std::vector<double> bins(static_cast<std::size_t>(model.n_bins));
  for (int k = 0; k < model.n_bins; ++k) {
    const double sigma = std::hypot(model.sigma_in_v[k], noise.sigma_per_component_v);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < samples_per_bin; ++i) {
      std::complex<double> v = mean[k];
      if (sigma > 0.0) v += sigma * rng.next_complex_gaussian();
      v *= noise.voltage_gain;
      v = {signal::quantize_value(v.real(), adc.quantizer),
           signal::quantize_value(v.imag(), adc.quantizer)};
      acc += v;
    }
    acc /= static_cast<double>(samples_per_bin);
    // Projection onto the calibrated axis; trajectories are real-valued in
    // this model family, so the axis is the real axis.
    bins[static_cast<std::size_t>(k)] = acc.real();
  }
  return bins;
}

void write_shots_csv(std::ostream& out, const std::vector<std::vector<double>>& shots,
                     const std::vector<int>& states) {
  if (shots.size() != states.size()) {
    throw ValidationError(kModule, "shots and states must have equal length");
  }
  out << "shot,state,bin,value\n";
  for (std::size_t i = 0; i < shots.size(); ++i) {
    for (std::size_t k = 0; k < shots[i].size(); ++k) {
      out << i << ',' << states[i] << ',' << k << ',' << csv::format_double(shots[i][k]) << '\n';
    }
  }
}

}  // namespace qcsim::readout
