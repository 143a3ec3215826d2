#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qcsim/rng.hpp"
#include "qcsim/signal.hpp"

namespace qcsim::readout {

constexpr double kBoltzmannJPerK = 1.380649e-23;
constexpr double kNoiseReferenceK = 290.0;  // standard noise-figure reference

/// Dispersive-readout plant: state-dependent mean voltage trajectories at the
/// input of the amplification chain, binned in time, plus the per-bin
/// input-referred noise of the qubit/resonator side.
struct QubitReadoutModel {
  double f_readout_hz = 6e9;  // must sit in the 4-8 GHz readout band
  int n_bins = 15;
  double bin_duration_s = 1e-7;
  std::vector<double> m0_v;       // mean trajectory, state 0
  std::vector<double> m1_v;       // mean trajectory, state 1
  std::vector<double> sigma_in_v; // per-sample noise std per component
};

void validate(const QubitReadoutModel& model);

/// Double-exponential settling trajectories; a stand-in calibration curve for
/// demos and the shipped scenarios.
QubitReadoutModel default_qubit_model();

struct AmplifierStage {
  std::string name;
  double gain_db = 0.0;  // power gain
  double nf_db = 0.0;
  double bw_hz = 0.0;
  double dc_power_w = 0.0;
  double in_impedance_ohm = 50.0;
};

struct ReadoutCascade {
  std::vector<AmplifierStage> stages;
};

void validate(const ReadoutCascade& cascade);

/// Sum of stage gains in dB.
double cascade_gain_db(const ReadoutCascade& cascade);

/// Friis combination of the stage noise figures, in dB.
double cascade_nf_db(const ReadoutCascade& cascade);

/// Overall bandwidth. With identical_single_pole set and n identical stages
/// of bandwidth B the cascade shrinks to B*sqrt(2^(1/n) - 1); otherwise the
/// minimum stage bandwidth is used.
double cascade_bandwidth_hz(const ReadoutCascade& cascade, bool identical_single_pole);

/// Input-referred excess noise power k*T0*B*(F-1) in watts.
double cascade_input_noise_power_w(const ReadoutCascade& cascade);

/// Input matching designs of the single-stage CMOS LNA. The two choices trade
/// gain and drive power; the high-impedance design buys 10 dB of gain at
/// roughly a tenth of the power.
enum class MatchingChoice { Ohm50, Ohm500 };

MatchingChoice matching_choice_from_string(const std::string& name);
const char* to_string(MatchingChoice choice);

AmplifierStage matching_params(MatchingChoice choice);

/// Device-level design values carried along for reporting; nothing in the
/// simulation consumes them.
struct MatchingMetadata {
  double r_f_ohm = 0.0;
  int fet1_fins = 0;
  int fet2_fins = 0;
};

MatchingMetadata matching_metadata(MatchingChoice choice);

struct AdcSpec {
  double sample_rate_hz = 500e6;
  signal::QuantizerSpec quantizer{12, 1.0};
};

void validate(const AdcSpec& adc);

/// Applies the cascade to a trace: input-referred Gaussian noise with power
/// k*T0*B*(F-1) through the first-stage impedance, then the voltage gain.
/// A noiseless cascade (F = 1) consumes no randomness.
signal::IqTrace amplify_trace(const signal::IqTrace& trace, const ReadoutCascade& cascade,
                              RngStream& rng);

/// One readout shot: per bin, the state trajectory plus plant and cascade
/// noise, amplified, ADC-quantized per sample, bin-averaged and projected
/// onto the real axis (the calibrated-means axis of this model family).
std::vector<double> simulate_shot(const QubitReadoutModel& model, int state,
                                  const ReadoutCascade& cascade, const AdcSpec& adc,
                                  RngStream& rng);

/// CSV export, header "shot,state,bin,value".
void write_shots_csv(std::ostream& out, const std::vector<std::vector<double>>& shots,
                     const std::vector<int>& states);

}  // namespace qcsim::readout
