#include "qcsim/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::disc {

namespace {
constexpr const char* kModule = "discriminator";
}

bool operator==(const Window& a, const Window& b) {
  return a.start_bin == b.start_bin && a.end_bin == b.end_bin;
}

CalibrationData calibrate(const std::vector<std::vector<double>>& shots0,
                          const std::vector<std::vector<double>>& shots1) {
  if (shots0.size() < 2 || shots1.size() < 2) {
    throw ValidationError(kModule, "calibration needs at least two shots per state");
  }
  const std::size_t n_bins = shots0.front().size();
  if (n_bins == 0) throw ValidationError(kModule, "calibration shots must have at least one bin");
  for (const auto* set : {&shots0, &shots1}) {
    for (const auto& shot : *set) {
      if (shot.size() != n_bins) {
        throw ValidationError(kModule, "calibration shots have mismatched bin counts");
      }
    }
  }

  CalibrationData cal;
  cal.n_bins = static_cast<int>(n_bins);
  cal.n_shots0 = shots0.size();
  cal.n_shots1 = shots1.size();
  cal.mu0.assign(n_bins, 0.0);
  cal.mu1.assign(n_bins, 0.0);
  cal.s.assign(n_bins, 0.0);

  for (const auto& shot : shots0) {
    for (std::size_t k = 0; k < n_bins; ++k) cal.mu0[k] += shot[k];
  }
  for (const auto& shot : shots1) {
    for (std::size_t k = 0; k < n_bins; ++k) cal.mu1[k] += shot[k];
  }
  for (std::size_t k = 0; k < n_bins; ++k) {
    cal.mu0[k] /= static_cast<double>(cal.n_shots0);
    cal.mu1[k] /= static_cast<double>(cal.n_shots1);
  }

  // Pooled variance across both states with Bessel correction.
  for (std::size_t k = 0; k < n_bins; ++k) {
    double ss = 0.0;
    for (const auto& shot : shots0) {
      const double d = shot[k] - cal.mu0[k];
      ss += d * d;
    }
    for (const auto& shot : shots1) {
      const double d = shot[k] - cal.mu1[k];
      ss += d * d;
    }
    cal.s[k] = std::sqrt(ss / static_cast<double>(cal.n_shots0 + cal.n_shots1 - 2));
  }
  return cal;
}

namespace {

void validate_cal(const CalibrationData& cal) {
  const auto n = static_cast<std::size_t>(cal.n_bins);
  if (cal.n_bins < 1 || cal.mu0.size() != n || cal.mu1.size() != n || cal.s.size() != n) {
    throw ValidationError(kModule, "calibration data arrays must have n_bins entries");
  }
  for (double v : cal.s) {
    if (!(v >= 0.0)) throw ValidationError(kModule, "pooled std must be non-negative");
  }
}

void validate_window(const Window& w, int n_bins) {
  if (w.start_bin < 0 || w.end_bin < w.start_bin || w.end_bin >= n_bins) {
    throw ValidationError(kModule, "window bins out of range");
  }
}

}  // namespace

std::vector<double> matched_weights(const CalibrationData& cal) {
  validate_cal(cal);
  double s_floor = std::numeric_limits<double>::infinity();
  for (double v : cal.s) {
    if (v > 0.0) s_floor = std::min(s_floor, v);
  }
  if (!std::isfinite(s_floor)) s_floor = 1.0;  // all-zero noise; scale is arbitrary

  std::vector<double> w(static_cast<std::size_t>(cal.n_bins));
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = cal.s[k] > 0.0 ? cal.s[k] : s_floor;
    w[k] = (cal.mu1[k] - cal.mu0[k]) / (s * s);
  }
  return w;
}

double mac_score(std::span<const double> x, const Discriminator& d) {
  if (x.size() != d.weights.size()) {
    throw ValidationError(kModule, "score input length does not match the weight vector");
  }
  validate_window(d.window, static_cast<int>(d.weights.size()));
  double acc = 0.0;
  for (int k = d.window.start_bin; k <= d.window.end_bin; ++k) {
    acc += d.weights[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
  }
  return acc;
}

int discriminate(double score, double threshold) { return score > threshold ? 1 : 0; }

double gaussian_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

namespace {

struct WindowScore {
  double snr;  // |M1 - M0| / sigma_score; +inf when noiseless but separated
  bool separated;
};

// Score statistics of the matched filter restricted to [a, b].
WindowScore windowed_matched_snr(const CalibrationData& cal, const std::vector<double>& weights,
                                 int a, int b) {
  double delta = 0.0;
  double var = 0.0;
  bool separated = false;
  for (int k = a; k <= b; ++k) {
    const auto i = static_cast<std::size_t>(k);
    delta += weights[i] * (cal.mu1[i] - cal.mu0[i]);
    var += weights[i] * weights[i] * cal.s[i] * cal.s[i];
    separated = separated || cal.mu1[i] != cal.mu0[i];
  }
  delta = std::abs(delta);
  WindowScore out{0.0, separated};
  if (var > 0.0) {
    out.snr = delta / std::sqrt(var);
  } else {
    out.snr = delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return out;
}

}  // namespace

Window optimal_window(const CalibrationData& cal) {
  validate_cal(cal);
  bool any_separation = false;
  for (int k = 0; k < cal.n_bins; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (cal.mu1[i] != cal.mu0[i]) any_separation = true;
  }
  if (!any_separation) {
    throw ValidationError(kModule, "degenerate calibration: no bin separates the states");
  }

  const auto weights = matched_weights(cal);
  Window best{0, 0};
  double best_snr = -1.0;
  // Fidelity is monotone in the score SNR, so the SNR is compared directly;
  // the saturating tail probability would tie large windows together.
  for (int a = 0; a < cal.n_bins; ++a) {
    for (int b = a; b < cal.n_bins; ++b) {
      const WindowScore ws = windowed_matched_snr(cal, weights, a, b);
      const bool better =
          ws.snr > best_snr ||
          (ws.snr == best_snr && (b - a < best.end_bin - best.start_bin ||
                                  (b - a == best.end_bin - best.start_bin && a < best.start_bin)));
      if (better) {
        best = {a, b};
        best_snr = ws.snr;
      }
    }
  }
  return best;
}

double score_snr(const CalibrationData& cal, const Discriminator& d) {
  validate_cal(cal);
  if (d.weights.size() != static_cast<std::size_t>(cal.n_bins)) {
    throw ValidationError(kModule, "weight vector length does not match the calibration");
  }
  validate_window(d.window, cal.n_bins);
  double delta = 0.0;
  double var = 0.0;
  for (int k = d.window.start_bin; k <= d.window.end_bin; ++k) {
    const auto i = static_cast<std::size_t>(k);
    delta += d.weights[i] * (cal.mu1[i] - cal.mu0[i]);
    var += d.weights[i] * d.weights[i] * cal.s[i] * cal.s[i];
  }
  delta = std::abs(delta);
  if (var > 0.0) return delta / std::sqrt(var);
  if (delta > 0.0) return std::numeric_limits<double>::infinity();
  throw ValidationError(kModule, "degenerate calibration: zero separation and zero noise");
}

FidelityEstimate fidelity_analytic(const CalibrationData& cal, const Discriminator& d) {
  const double snr = score_snr(cal, d);
  FidelityEstimate est;
  est.method = FidelityMethod::Analytic;
  est.ci_halfwidth = 0.0;
  est.fidelity = std::isinf(snr) ? 1.0 : 1.0 - gaussian_tail(snr / 2.0);
  return est;
}

Discriminator build_discriminator(const CalibrationData& cal) {
  Discriminator d;
  d.weights = matched_weights(cal);
  d.window = optimal_window(cal);
  double m0 = 0.0;
  double m1 = 0.0;
  for (int k = d.window.start_bin; k <= d.window.end_bin; ++k) {
    const auto i = static_cast<std::size_t>(k);
    m0 += d.weights[i] * cal.mu0[i];
    m1 += d.weights[i] * cal.mu1[i];
  }
  d.threshold = 0.5 * (m0 + m1);
  return d;
}

FidelityEstimate fidelity_monte_carlo(const Plant& plant, const Discriminator& d,
                                      std::size_t n_shots_per_state, std::uint64_t seed) {
  if (n_shots_per_state < 100) {
    throw ValidationError(kModule, "Monte Carlo fidelity needs at least 100 shots per state");
  }
  std::size_t errors = 0;
  for (int state = 0; state <= 1; ++state) {
    for (std::size_t i = 0; i < n_shots_per_state; ++i) {
      RngStream rng(seed, static_cast<std::uint64_t>(state) * n_shots_per_state + i);
      const auto x = readout::simulate_shot(plant.model, state, plant.cascade, plant.adc, rng);
      const int decided = discriminate(mac_score(x, d), d.threshold);
      if (decided != state) ++errors;
    }
  }
  const double n_total = 2.0 * static_cast<double>(n_shots_per_state);
  const double p_hat = static_cast<double>(errors) / n_total;

  // Wilson 95% half-width on the pooled error rate.
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double halfwidth = z *
                           std::sqrt(p_hat * (1.0 - p_hat) / n_total + z2 / (4.0 * n_total * n_total)) /
                           (1.0 + z2 / n_total);

  FidelityEstimate est;
  est.method = FidelityMethod::MonteCarlo;
  est.fidelity = 1.0 - p_hat;
  est.ci_halfwidth = halfwidth;
  return est;
}

void write_calibration_csv(std::ostream& out, const std::vector<std::vector<double>>& shots0,
                           const std::vector<std::vector<double>>& shots1) {
  out << "state,shot,bin,value\n";
  for (int state = 0; state <= 1; ++state) {
    const auto& shots = state == 0 ? shots0 : shots1;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      for (std::size_t k = 0; k < shots[i].size(); ++k) {
        out << state << ',' << i << ',' << k << ',' << csv::format_double(shots[i][k]) << '\n';
      }
    }
  }
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
read_calibration_csv(std::istream& in) {
  std::vector<std::vector<double>> shots0;
  std::vector<std::vector<double>> shots1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = csv::trim(line);
    if (line.empty() || line.rfind("state,", 0) == 0) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4) {
      throw ParseError("calibration CSV line " + std::to_string(line_no) +
                       ": expected state,shot,bin,value");
    }
    const long long state = csv::parse_int(fields[0], "state");
    const auto shot = static_cast<std::size_t>(csv::parse_int(fields[1], "shot"));
    const auto bin = static_cast<std::size_t>(csv::parse_int(fields[2], "bin"));
    const double value = csv::parse_double(fields[3], "value");
    if (state != 0 && state != 1) {
      throw ParseError("calibration CSV line " + std::to_string(line_no) + ": state must be 0/1");
    }
    auto& shots = state == 0 ? shots0 : shots1;
    if (shot >= shots.size()) shots.resize(shot + 1);
    if (bin >= shots[shot].size()) shots[shot].resize(bin + 1, 0.0);
    shots[shot][bin] = value;
  }
  return {std::move(shots0), std::move(shots1)};
}

void write_discriminator_csv(std::ostream& out, const Discriminator& d) {
  out << "field,index,value\n";
  for (std::size_t k = 0; k < d.weights.size(); ++k) {
    out << "weight," << k << ',' << csv::format_double(d.weights[k]) << '\n';
  }
  out << "window_start,0," << d.window.start_bin << '\n';
  out << "window_end,0," << d.window.end_bin << '\n';
  out << "threshold,0," << csv::format_double(d.threshold) << '\n';
}

Discriminator read_discriminator_csv(std::istream& in) {
  Discriminator d;
  std::map<std::size_t, double> weights;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = csv::trim(line);
    if (line.empty() || line.rfind("field,", 0) == 0) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError("discriminator CSV line " + std::to_string(line_no) +
                       ": expected field,index,value");
    }
    if (fields[0] == "weight") {
      weights[static_cast<std::size_t>(csv::parse_int(fields[1], "index"))] =
          csv::parse_double(fields[2], "weight");
    } else if (fields[0] == "window_start") {
      d.window.start_bin = static_cast<int>(csv::parse_int(fields[2], "window_start"));
    } else if (fields[0] == "window_end") {
      d.window.end_bin = static_cast<int>(csv::parse_int(fields[2], "window_end"));
    } else if (fields[0] == "threshold") {
      d.threshold = csv::parse_double(fields[2], "threshold");
    } else {
      throw ParseError("discriminator CSV line " + std::to_string(line_no) + ": unknown field '" +
                       fields[0] + "'");
    }
  }
  d.weights.resize(weights.empty() ? 0 : weights.rbegin()->first + 1, 0.0);
  for (const auto& [k, v] : weights) d.weights[k] = v;
  return d;
}

}  // namespace qcsim::disc
