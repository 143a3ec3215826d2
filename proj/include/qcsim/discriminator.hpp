#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "qcsim/readout.hpp"

namespace qcsim::disc {

/// Per-bin statistics estimated from labeled calibration shots.
struct CalibrationData {
  int n_bins = 0;
  std::vector<double> mu0;  // per-bin mean, state 0
  std::vector<double> mu1;  // per-bin mean, state 1
  std::vector<double> s;    // pooled per-bin std (Bessel-corrected)
  std::size_t n_shots0 = 0;
  std::size_t n_shots1 = 0;
};

struct Window {
  int start_bin = 0;
  int end_bin = 0;  // inclusive
};

bool operator==(const Window& a, const Window& b);

struct Discriminator {
  std::vector<double> weights;
  Window window;
  double threshold = 0.0;
};

enum class FidelityMethod { Analytic, MonteCarlo };

struct FidelityEstimate {
  double fidelity = 0.0;
  double ci_halfwidth = 0.0;
  FidelityMethod method = FidelityMethod::Analytic;
};

/// Per-bin sample means and the pooled (both states) standard deviation.
/// Requires at least two shots per state and matching bin counts.
CalibrationData calibrate(const std::vector<std::vector<double>>& shots0,
                          const std::vector<std::vector<double>>& shots1);

/// Matched-filter weights w[k] = (mu1[k] - mu0[k]) / s[k]^2. Bins with zero
/// pooled std borrow the smallest nonzero one.
std::vector<double> matched_weights(const CalibrationData& cal);

/// Windowed weighted accumulation: sum over the window of w[k]*x[k].
double mac_score(std::span<const double> x, const Discriminator& d);

/// 1 if the score exceeds the threshold, 0 otherwise (ties report 0).
int discriminate(double score, double threshold);

/// Exhaustive search over contiguous windows for the one maximizing the
/// analytic fidelity of the matched filter restricted to it. Ties prefer the
/// narrower window, then the earlier start.
Window optimal_window(const CalibrationData& cal);

/// Gaussian-overlap fidelity of the discriminator on the calibrated plant,
/// with the threshold at the midpoint of the score means.
FidelityEstimate fidelity_analytic(const CalibrationData& cal, const Discriminator& d);

/// Matched weights on the optimal window with the midpoint threshold.
Discriminator build_discriminator(const CalibrationData& cal);

/// Separation-to-noise ratio |M1 - M0| / sigma_score of the discriminator on
/// the calibrated plant; fidelity is 1 - Q(ratio/2).
double score_snr(const CalibrationData& cal, const Discriminator& d);

/// Upper Gaussian tail Q(z).
double gaussian_tail(double z);

struct Plant {
  readout::QubitReadoutModel model;
  readout::ReadoutCascade cascade;
  readout::AdcSpec adc;
};

/// End-to-end Monte Carlo fidelity: n_shots per state through the readout
/// chain, classified with d. fidelity = 1 - (FPR + FNR)/2, with a Wilson 95%
/// half-width on the pooled error rate. Shot i of state s uses stream
/// s*n_shots + i of the given seed, so the result is order-independent.
FidelityEstimate fidelity_monte_carlo(const Plant& plant, const Discriminator& d,
                                      std::size_t n_shots_per_state, std::uint64_t seed);

// Calibration shots as CSV rows "state,shot,bin,value".
void write_calibration_csv(std::ostream& out, const std::vector<std::vector<double>>& shots0,
                           const std::vector<std::vector<double>>& shots1);
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
read_calibration_csv(std::istream& in);

// Discriminator round-trip CSV (weights, window, threshold), bit-exact.
void write_discriminator_csv(std::ostream& out, const Discriminator& d);
Discriminator read_discriminator_csv(std::istream& in);

}  // namespace qcsim::disc
