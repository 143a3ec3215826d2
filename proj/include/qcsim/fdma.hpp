#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

namespace qcsim::fdma {

struct Band {
  double f_lo_hz = 4e9;
  double f_hi_hz = 8e9;
};

struct ChannelPlan {
  Band band;
  double channel_bw_hz = 0.0;
  double guard_hz = 0.0;
  std::vector<std::pair<int, double>> assignments;  // qubit id -> center frequency
};

/// Largest n with n*bw + (n-1)*guard <= band span; 0 when one channel does
/// not fit.
int capacity(const Band& band, double channel_bw_hz, double guard_hz);

/// Packs channels from the low band edge upward:
/// center_i = f_lo + bw/2 + i*(bw + guard). Exceeding the capacity raises an
/// error that reports the maximum.
ChannelPlan allocate(int n_qubits, const Band& band, double channel_bw_hz, double guard_hz);

/// Checks the plan invariants: every channel inside the band, pairwise
/// spacing at least bw + guard.
void validate(const ChannelPlan& plan);

/// Adjacent-channel leakage under a power-law spectral rolloff:
/// leakage(i,j) = -10*rolloff*log10(|df|/(bw/2)), clamped to <= 0 dB, with a
/// 0 dB diagonal.
std::vector<std::vector<double>> crosstalk_db(const ChannelPlan& plan, double rolloff_exponent);

/// CSV export, header "qubit,center_hz,bw_hz".
void write_plan_csv(std::ostream& out, const ChannelPlan& plan);

}  // namespace qcsim::fdma
