#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qcsim/rng.hpp"

namespace qcsim::signal {

/// Uniformly sampled complex baseband voltage signal. RF carriers are kept as
/// metadata by the callers; nothing here runs at the carrier rate.
struct IqTrace {
  std::vector<std::complex<double>> samples;  // volts, I + jQ
  double sample_rate_hz = 0.0;
  double start_time_s = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

bool operator==(const IqTrace& a, const IqTrace& b);

/// Throws ValidationError("signal-core") if the trace violates its invariants
/// (positive sample rate, all samples finite).
void validate(const IqTrace& trace);

/// Mid-tread uniform converter model, step 2*full_scale/2^bits.
struct QuantizerSpec {
  int bits = 12;
  double full_scale_v = 1.0;
};

void validate(const QuantizerSpec& spec);

double quantizer_step_v(const QuantizerSpec& spec);

// dB conversions. Non-finite input is rejected.
double db_to_power_ratio(double db);
double db_to_voltage_ratio(double db);
double power_ratio_to_db(double ratio);

/// Complex tone: samples[k] = amplitude * exp(j(2*pi*f*k/fs + phase)).
/// The frequency must sit below Nyquist.
IqTrace synth_tone(double freq_hz, double amplitude_v, double phase_rad,
                   double sample_rate_hz, std::size_t n_samples);

/// Adds independent Gaussian noise of standard deviation sigma_v to the real
/// and imaginary part of every sample. sigma_v = 0 returns the input
/// unchanged and consumes no randomness.
IqTrace add_awgn(const IqTrace& trace, double sigma_v, RngStream& rng);

/// Mid-tread quantization of I and Q; inputs beyond +/-full_scale clip to the
/// extreme codes. Idempotent.
IqTrace quantize(const IqTrace& trace, const QuantizerSpec& spec);

double quantize_value(double v, const QuantizerSpec& spec);

/// Mean power of the trace into the given impedance, in dBm.
/// Zero-length or all-zero traces report -infinity.
double trace_power_dbm(const IqTrace& trace, double ref_impedance_ohm);

/// Mean |v|^2 / R in watts.
double trace_power_w(const IqTrace& trace, double ref_impedance_ohm);

/// CSV export, header "index,t_s,i_v,q_v", full double precision.
void write_trace_csv(std::ostream& out, const IqTrace& trace);

}  // namespace qcsim::signal
