#include "qcsim/awg.hpp"

#include <cmath>
#include <complex>
#include <istream>
#include <numbers>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::awg {

namespace {
constexpr const char* kModule = "awg";
}

void WaveformMemory::add(const std::string& wave_id, std::vector<double> envelope) {
  if (wave_id.empty()) throw ValidationError(kModule, "wave id must not be empty");
  if (envelope.size() > depth_limit_) {
    throw ValidationError(kModule, "waveform '" + wave_id + "' exceeds the depth limit of " +
                                       std::to_string(depth_limit_) + " samples");
  }
  for (double v : envelope) {
    if (!(v >= -1.0 && v <= 1.0)) {
      throw ValidationError(kModule, "waveform '" + wave_id + "' has a sample outside [-1, 1]");
    }
  }
  entries_[wave_id] = std::move(envelope);
}

const std::vector<double>& WaveformMemory::get(const std::string& wave_id) const {
  auto it = entries_.find(wave_id);
  if (it == entries_.end()) {
    throw ValidationError(kModule, "unknown wave id '" + wave_id + "'");
  }
  return it->second;
}

WaveformMemory load_waveform_csv(std::istream& in, std::size_t depth_limit) {
  WaveformMemory memory(depth_limit);
  std::map<std::string, std::vector<double>> staging;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = csv::trim(line);
    if (line.empty() || line.rfind("wave_id,", 0) == 0 || line[0] == '#') continue;
    auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError("waveform CSV line " + std::to_string(line_no) +
                       ": expected wave_id,index,value");
    }
    const std::string& id = fields[0];
    const long long index = csv::parse_int(fields[1], "waveform index");
    const double value = csv::parse_double(fields[2], "waveform value");
    auto& samples = staging[id];
    if (index != static_cast<long long>(samples.size())) {
      throw ParseError("waveform CSV line " + std::to_string(line_no) + ": index " +
                       std::to_string(index) + " out of order for '" + id + "'");
    }
    samples.push_back(value);
  }
  for (auto& [id, samples] : staging) {
    memory.add(id, std::move(samples));
  }
  return memory;
}

void validate(const DdsConfig& cfg) {
  if (cfg.acc_width_bits < 8 || cfg.acc_width_bits > 48) {
    throw ValidationError(kModule, "accumulator width must be in [8, 48] bits");
  }
  if (!(cfg.sample_clock_hz > 0.0)) {
    throw ValidationError(kModule, "sample clock must be positive");
  }
  if (cfg.ftw >= (1ULL << (cfg.acc_width_bits - 1))) {
    throw ValidationError(kModule, "tuning word must stay below Nyquist (2^(N-1))");
  }
}

std::uint64_t ftw_for(double f_out_hz, const DdsConfig& cfg) {
  DdsConfig probe = cfg;
  probe.ftw = 0;
  validate(probe);
  if (f_out_hz < 0.0 || f_out_hz >= cfg.sample_clock_hz / 2.0) {
    throw ValidationError(kModule, "output frequency must lie in [0, Nyquist)");
  }
  const double modulus = std::ldexp(1.0, cfg.acc_width_bits);
  auto ftw =
      static_cast<std::uint64_t>(std::llround(f_out_hz / cfg.sample_clock_hz * modulus));
  // A request within half a tuning step of Nyquist rounds up to the invalid
  // word; pin it to the largest valid one.
  const std::uint64_t nyquist = 1ULL << (cfg.acc_width_bits - 1);
  if (ftw >= nyquist) ftw = nyquist - 1;
  return ftw;
}

double dds_frequency_hz(const DdsConfig& cfg) {
  return static_cast<double>(cfg.ftw) / std::ldexp(1.0, cfg.acc_width_bits) * cfg.sample_clock_hz;
}

std::vector<std::uint64_t> dds_phase_sequence(const DdsConfig& cfg, std::size_t n_samples) {
  validate(cfg);
  const std::uint64_t mask = (cfg.acc_width_bits == 64) ? ~0ULL
                                                        : (1ULL << cfg.acc_width_bits) - 1;
  std::vector<std::uint64_t> phases(n_samples);
  std::uint64_t acc = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    phases[k] = acc;
    acc = (acc + cfg.ftw) & mask;
  }
  return phases;
}

signal::IqTrace dds_carrier(const DdsConfig& cfg, std::size_t n_samples) {
  const auto phases = dds_phase_sequence(cfg, n_samples);
  const double scale = 2.0 * std::numbers::pi / std::ldexp(1.0, cfg.acc_width_bits);
  signal::IqTrace trace;
  trace.sample_rate_hz = cfg.sample_clock_hz;
  trace.samples.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    trace.samples[k] = std::polar(1.0, scale * static_cast<double>(phases[k]));
  }
  return trace;
}

signal::IqTrace play_pulse(const WaveformMemory& memory, const std::string& wave_id,
                           const DdsConfig& cfg, double amplitude_v, double phase_rad) {
  const auto& envelope = memory.get(wave_id);
  signal::IqTrace out = dds_carrier(cfg, envelope.size());
  const std::complex<double> rot = std::polar(amplitude_v, phase_rad);
  for (std::size_t k = 0; k < envelope.size(); ++k) {
    out.samples[k] *= rot * envelope[k];
  }
  return out;
}

MixResult lo_upconvert_and_snr_penalty(const signal::IqTrace& if_trace, const LoSpec& lo,
                                       RngStream& rng) {
  signal::validate(if_trace);
  if (if_trace.samples.empty()) {
    throw ValidationError(kModule, "IF trace must be non-empty");
  }
  if (lo.phase_jitter_rms_rad < 0.0) {
    throw ValidationError(kModule, "LO jitter must be non-negative");
  }

  const double w = 2.0 * std::numbers::pi * lo.lo_freq_hz / if_trace.sample_rate_hz;
  MixResult result;
  result.trace = if_trace;

  // Cross-correlate the jittered mix with the ideal mix; the LO phase cancels
  // in the correlation, leaving sum |x|^2 e^{j theta_k}.
  std::complex<double> corr = 0.0;
  double p_ideal = 0.0;
  for (std::size_t k = 0; k < if_trace.samples.size(); ++k) {
    const double theta = lo.phase_jitter_rms_rad == 0.0
                             ? 0.0
                             : lo.phase_jitter_rms_rad * rng.next_gaussian();
    const double carrier_phase = w * static_cast<double>(k);
    result.trace.samples[k] = if_trace.samples[k] * std::polar(1.0, carrier_phase + theta);
    const double p = std::norm(if_trace.samples[k]);
    corr += p * std::polar(1.0, theta);
    p_ideal += p;
  }

  if (p_ideal == 0.0) {
    result.snr_penalty_db = 0.0;
    return result;
  }
  // |corr|^2 / (P_jittered * P_ideal) is the coherence with the ideal mix;
  // both mixes carry the same total power, so the penalty reduces to
  // -20*log10(|mean weighted e^{j theta}|).
  const double coherence = std::abs(corr) / p_ideal;
  result.snr_penalty_db = -20.0 * std::log10(coherence);
  return result;
}

}  // namespace qcsim::awg
