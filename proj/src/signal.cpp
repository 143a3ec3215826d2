#include "qcsim/signal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::signal {

namespace {
constexpr const char* kModule = "signal-core";
}

bool operator==(const IqTrace& a, const IqTrace& b) {
  return a.sample_rate_hz == b.sample_rate_hz && a.start_time_s == b.start_time_s &&
         a.samples == b.samples;
}

void validate(const IqTrace& trace) {
  if (!(trace.sample_rate_hz > 0.0)) {
    throw ValidationError(kModule, "trace sample rate must be positive");
  }
  for (const auto& s : trace.samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw ValidationError(kModule, "trace contains a non-finite sample");
    }
  }
}

void validate(const QuantizerSpec& spec) {
  if (spec.bits < 1 || spec.bits > 24) {
    throw ValidationError(kModule, "quantizer bits must be in [1, 24]");
  }
  if (!(spec.full_scale_v > 0.0)) {
    throw ValidationError(kModule, "quantizer full scale must be positive");
  }
}

double quantizer_step_v(const QuantizerSpec& spec) {
  return 2.0 * spec.full_scale_v / static_cast<double>(1LL << spec.bits);
}

double db_to_power_ratio(double db) {
  if (!std::isfinite(db)) throw ValidationError(kModule, "dB value must be finite");
  return std::pow(10.0, db / 10.0);
}

double db_to_voltage_ratio(double db) {
  if (!std::isfinite(db)) throw ValidationError(kModule, "dB value must be finite");
  return std::pow(10.0, db / 20.0);
}

double power_ratio_to_db(double ratio) {
  if (!(ratio > 0.0)) throw ValidationError(kModule, "power ratio must be positive");
  return 10.0 * std::log10(ratio);
}

IqTrace synth_tone(double freq_hz, double amplitude_v, double phase_rad,
                   double sample_rate_hz, std::size_t n_samples) {
  if (!(sample_rate_hz > 0.0)) {
    throw ValidationError(kModule, "tone sample rate must be positive");
  }
  if (freq_hz < 0.0 || freq_hz >= sample_rate_hz / 2.0) {
    throw ValidationError(kModule, "tone frequency must lie in [0, Nyquist)");
  }
  IqTrace trace;
  trace.sample_rate_hz = sample_rate_hz;
  trace.samples.resize(n_samples);
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  for (std::size_t k = 0; k < n_samples; ++k) {
    trace.samples[k] = std::polar(amplitude_v, w * static_cast<double>(k) + phase_rad);
  }
  return trace;
}

IqTrace add_awgn(const IqTrace& trace, double sigma_v, RngStream& rng) {
  validate(trace);
  if (sigma_v < 0.0) throw ValidationError(kModule, "noise sigma must be non-negative");
  if (sigma_v == 0.0) return trace;
  IqTrace out = trace;
  for (auto& s : out.samples) {
    s += sigma_v * rng.next_complex_gaussian();
  }
  return out;
}

double quantize_value(double v, const QuantizerSpec& spec) {
  const double step = quantizer_step_v(spec);
  const long long max_code = (1LL << (spec.bits - 1)) - 1;
  const long long min_code = -(1LL << (spec.bits - 1));
  // Clip before rounding so arbitrarily large inputs cannot overflow the
  // integer conversion.
  if (v >= spec.full_scale_v) return static_cast<double>(max_code) * step;
  if (v <= -spec.full_scale_v) return static_cast<double>(min_code) * step;
  long long code = std::llround(v / step);
  if (code > max_code) code = max_code;
  if (code < min_code) code = min_code;
  return static_cast<double>(code) * step;
}

IqTrace quantize(const IqTrace& trace, const QuantizerSpec& spec) {
  validate(trace);
  validate(spec);
  IqTrace out = trace;
  for (auto& s : out.samples) {
    s = {quantize_value(s.real(), spec), quantize_value(s.imag(), spec)};
  }
  return out;
}

double trace_power_w(const IqTrace& trace, double ref_impedance_ohm) {
  if (!(ref_impedance_ohm > 0.0)) {
    throw ValidationError(kModule, "reference impedance must be positive");
  }
  if (trace.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : trace.samples) acc += std::norm(s);
  return acc / static_cast<double>(trace.samples.size()) / ref_impedance_ohm;
}

double trace_power_dbm(const IqTrace& trace, double ref_impedance_ohm) {
  const double p_w = trace_power_w(trace, ref_impedance_ohm);
  if (p_w <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p_w / 1e-3);
}

void write_trace_csv(std::ostream& out, const IqTrace& trace) {
  out << "index,t_s,i_v,q_v\n";
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const double t = trace.start_time_s + static_cast<double>(k) / trace.sample_rate_hz;
    out << k << ',' << csv::format_double(t) << ',' << csv::format_double(trace.samples[k].real())
        << ',' << csv::format_double(trace.samples[k].imag()) << '\n';
  }
}

}  // namespace qcsim::signal
