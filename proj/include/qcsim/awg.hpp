#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qcsim/rng.hpp"
#include "qcsim/signal.hpp"

namespace qcsim::awg {

/// Envelope store for the waveform generator. Samples are dimensionless in
/// [-1, 1]; the on-chip memory budget caps the per-entry depth.
class WaveformMemory {
 public:
  explicit WaveformMemory(std::size_t depth_limit = 4096) : depth_limit_(depth_limit) {}

  void add(const std::string& wave_id, std::vector<double> envelope);
  const std::vector<double>& get(const std::string& wave_id) const;
  bool contains(const std::string& wave_id) const { return entries_.count(wave_id) != 0; }
  std::size_t depth_limit() const { return depth_limit_; }
  const std::map<std::string, std::vector<double>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<double>> entries_;
  std::size_t depth_limit_;
};

/// Loads entries from CSV rows "wave_id,index,value". Indices must count up
/// from 0 within each entry.
WaveformMemory load_waveform_csv(std::istream& in, std::size_t depth_limit = 4096);

/// Numerically controlled oscillator configuration. The accumulator is N bits
/// wide and advances by the frequency tuning word every sample clock.
struct DdsConfig {
  int acc_width_bits = 32;
  std::uint64_t ftw = 0;
  double sample_clock_hz = 5e9;
};

void validate(const DdsConfig& cfg);

/// Tuning word for the requested output frequency:
/// ftw = round(f_out / clk * 2^N). The achieved frequency error is at most
/// clk / 2^(N+1).
std::uint64_t ftw_for(double f_out_hz, const DdsConfig& cfg);

/// Frequency actually produced by the configured tuning word.
double dds_frequency_hz(const DdsConfig& cfg);

/// Raw accumulator sequence: phi[0] = 0, phi[k+1] = (phi[k] + ftw) mod 2^N.
std::vector<std::uint64_t> dds_phase_sequence(const DdsConfig& cfg, std::size_t n_samples);

/// Unit-amplitude carrier exp(j*2*pi*phi[k]/2^N).
signal::IqTrace dds_carrier(const DdsConfig& cfg, std::size_t n_samples);

/// Envelope times carrier: out[k] = amplitude * env[k] * carrier[k] * e^{j*phase}.
signal::IqTrace play_pulse(const WaveformMemory& memory, const std::string& wave_id,
                           const DdsConfig& cfg, double amplitude_v, double phase_rad);

/// Reference analog upconversion path used to quantify why the direct
/// synthesis route is preferred: a local oscillator with per-sample Gaussian
/// phase jitter.
struct LoSpec {
  double lo_freq_hz = 0.0;
  double phase_jitter_rms_rad = 0.0;
};

struct MixResult {
  signal::IqTrace trace;
  double snr_penalty_db = 0.0;
};

/// Mixes the IF trace with the jittered LO and reports the SNR penalty
/// relative to an ideal (jitter-free) mix: the loss of coherent power,
/// -10*log10 of the normalized correlation with the ideal mix. Zero jitter
/// gives a penalty of exactly 0 dB.
MixResult lo_upconvert_and_snr_penalty(const signal::IqTrace& if_trace, const LoSpec& lo,
                                       RngStream& rng);

}  // namespace qcsim::awg
