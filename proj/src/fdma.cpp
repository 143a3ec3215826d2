#include "qcsim/fdma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::fdma {

namespace {

constexpr const char* kModule = "fdma";

void check_params(const Band& band, double bw, double guard) {
  if (!(band.f_hi_hz > band.f_lo_hz)) {
    throw ValidationError(kModule, "band upper edge must exceed the lower edge");
  }
  if (!(bw > 0.0)) throw ValidationError(kModule, "channel bandwidth must be positive");
  if (guard < 0.0) throw ValidationError(kModule, "guard band must be non-negative");
}

bool fits(int n, double span, double bw, double guard) {
  if (n <= 0) return true;
  return static_cast<double>(n) * bw + static_cast<double>(n - 1) * guard <= span;
}

}  // namespace

int capacity(const Band& band, double channel_bw_hz, double guard_hz) {
  check_params(band, channel_bw_hz, guard_hz);
  const double span = band.f_hi_hz - band.f_lo_hz;
  if (channel_bw_hz > span) return 0;
  // Closed form, then nudged so the result agrees exactly with the packing
  // inequality even when the division lands on a representation boundary.
  int n = static_cast<int>(std::floor((span + guard_hz) / (channel_bw_hz + guard_hz)));
  while (n > 0 && !fits(n, span, channel_bw_hz, guard_hz)) --n;
  while (fits(n + 1, span, channel_bw_hz, guard_hz)) ++n;
  return n;
}

ChannelPlan allocate(int n_qubits, const Band& band, double channel_bw_hz, double guard_hz) {
  check_params(band, channel_bw_hz, guard_hz);
  if (n_qubits < 1) throw ValidationError(kModule, "at least one qubit must be requested");
  const int cap = capacity(band, channel_bw_hz, guard_hz);
  if (n_qubits > cap) {
    throw ValidationError(kModule, "requested " + std::to_string(n_qubits) +
                                       " channels but the band fits at most " +
                                       std::to_string(cap));
  }
  ChannelPlan plan;
  plan.band = band;
  plan.channel_bw_hz = channel_bw_hz;
  plan.guard_hz = guard_hz;
  plan.assignments.reserve(static_cast<std::size_t>(n_qubits));
  for (int i = 0; i < n_qubits; ++i) {
    const double center = band.f_lo_hz + channel_bw_hz / 2.0 +
                          static_cast<double>(i) * (channel_bw_hz + guard_hz);
    plan.assignments.emplace_back(i, center);
  }
  return plan;
}

void validate(const ChannelPlan& plan) {
  check_params(plan.band, plan.channel_bw_hz, plan.guard_hz);
  const double half = plan.channel_bw_hz / 2.0;
  // Slack for double-precision packing arithmetic at multi-GHz magnitudes.
  const double tol = 1e-9 * std::max(1.0, std::abs(plan.band.f_hi_hz));
  for (const auto& [qubit, center] : plan.assignments) {
    if (center - half < plan.band.f_lo_hz - tol || center + half > plan.band.f_hi_hz + tol) {
      throw ValidationError(kModule, "channel for qubit " + std::to_string(qubit) +
                                         " extends outside the band");
    }
  }
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    for (std::size_t j = i + 1; j < plan.assignments.size(); ++j) {
      const double spacing = std::abs(plan.assignments[i].second - plan.assignments[j].second);
      if (spacing < plan.channel_bw_hz + plan.guard_hz - tol) {
        throw ValidationError(kModule, "channels for qubits " +
                                           std::to_string(plan.assignments[i].first) + " and " +
                                           std::to_string(plan.assignments[j].first) +
                                           " are closer than bw + guard");
      }
    }
  }
}

std::vector<std::vector<double>> crosstalk_db(const ChannelPlan& plan, double rolloff_exponent) {
  validate(plan);
  if (!(rolloff_exponent > 0.0)) {
    throw ValidationError(kModule, "rolloff exponent must be positive");
  }
  const std::size_t n = plan.assignments.size();
  const double half = plan.channel_bw_hz / 2.0;
  std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double df = std::abs(plan.assignments[i].second - plan.assignments[j].second);
      double leak;
      if (std::isinf(df)) {
        leak = -std::numeric_limits<double>::infinity();
      } else {
        leak = std::min(0.0, -10.0 * rolloff_exponent * std::log10(df / half));
      }
      matrix[i][j] = leak;
      matrix[j][i] = leak;
    }
  }
  return matrix;
}

void write_plan_csv(std::ostream& out, const ChannelPlan& plan) {
  out << "qubit,center_hz,bw_hz\n";
  for (const auto& [qubit, center] : plan.assignments) {
    out << qubit << ',' << csv::format_double(center) << ','
        << csv::format_double(plan.channel_bw_hz) << '\n';
  }
}

}  // namespace qcsim::fdma
