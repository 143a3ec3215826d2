#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "qcsim/discriminator.hpp"
#include "qcsim/errors.hpp"
#include "test_util.hpp"

using namespace qcsim;
using namespace qcsim::disc;

namespace {

CalibrationData make_cal(std::vector<double> mu0, std::vector<double> mu1,
                         std::vector<double> s) {
  CalibrationData cal;
  cal.n_bins = static_cast<int>(mu0.size());
  cal.mu0 = std::move(mu0);
  cal.mu1 = std::move(mu1);
  cal.s = std::move(s);
  cal.n_shots0 = cal.n_shots1 = 2;
  return cal;
}

// Independent exhaustive window search used as the oracle: recomputes the
// restricted matched filter and its score SNR from scratch, with the same
// tie-breaking contract (narrower window, then earlier start).
Window brute_force_window(const CalibrationData& cal) {
  double s_floor = std::numeric_limits<double>::infinity();
  for (double v : cal.s) {
    if (v > 0.0 && v < s_floor) s_floor = v;
  }
  if (!std::isfinite(s_floor)) s_floor = 1.0;

  Window best{0, 0};
  double best_snr = -1.0;
  for (int a = 0; a < cal.n_bins; ++a) {
    for (int b = a; b < cal.n_bins; ++b) {
      double delta = 0.0;
      double var = 0.0;
      for (int k = a; k <= b; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double sk = cal.s[i] > 0.0 ? cal.s[i] : s_floor;
        const double w = (cal.mu1[i] - cal.mu0[i]) / (sk * sk);
        delta += w * (cal.mu1[i] - cal.mu0[i]);
        var += w * w * cal.s[i] * cal.s[i];
      }
      delta = std::abs(delta);
      double snr;
      if (var > 0.0) {
        snr = delta / std::sqrt(var);
      } else {
        snr = delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      }
      const bool better =
          snr > best_snr ||
          (snr == best_snr && (b - a < best.end_bin - best.start_bin ||
                               (b - a == best.end_bin - best.start_bin && a < best.start_bin)));
      if (better) {
        best = {a, b};
        best_snr = snr;
      }
    }
  }
  return best;
}

Discriminator uniform_discriminator(const CalibrationData& cal, Window window) {
  Discriminator d;
  d.weights.assign(static_cast<std::size_t>(cal.n_bins), 1.0);
  d.window = window;
  d.threshold = 0.0;
  return d;
}

}  // namespace

TEST_CASE("calibrate: constant shots give exact means and zero std") {
  const std::vector<std::vector<double>> shots(5, std::vector<double>(4, 2.5));
  const auto cal = calibrate(shots, shots);
  for (int k = 0; k < 4; ++k) {
    CHECK(cal.mu0[static_cast<std::size_t>(k)] == doctest::Approx(2.5));
    CHECK(cal.mu1[static_cast<std::size_t>(k)] == doctest::Approx(2.5));
    CHECK(cal.s[static_cast<std::size_t>(k)] == 0.0);
  }
}

TEST_CASE("calibrate: recovers synthetic Gaussian parameters") {
  testutil::XorShift rng(41);
  const double mu = 3.0;
  const double sigma = 0.7;
  const std::size_t n = 10000;
  std::vector<std::vector<double>> shots0(n, std::vector<double>(3));
  std::vector<std::vector<double>> shots1(n, std::vector<double>(3));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      shots0[i][static_cast<std::size_t>(k)] = sigma * rng.gaussian();
      shots1[i][static_cast<std::size_t>(k)] = mu + sigma * rng.gaussian();
    }
  }
  const auto cal = calibrate(shots0, shots1);
  for (int k = 0; k < 3; ++k) {
    const auto i = static_cast<std::size_t>(k);
    CHECK(std::abs(cal.mu0[i] - 0.0) < 4.0 * sigma / 100.0);
    CHECK(std::abs(cal.mu1[i] - mu) < 4.0 * sigma / 100.0);
    CHECK(cal.s[i] == doctest::Approx(sigma).epsilon(0.05));
  }
}

TEST_CASE("calibrate: rejects mismatched bins and too few shots") {
  std::vector<std::vector<double>> a(3, std::vector<double>(15, 0.0));
  std::vector<std::vector<double>> b(3, std::vector<double>(14, 0.0));
  CHECK_THROWS_AS(calibrate(a, b), ValidationError);
  std::vector<std::vector<double>> one(1, std::vector<double>(15, 0.0));
  CHECK_THROWS_AS(calibrate(one, a), ValidationError);
}

TEST_CASE("matched_weights: degenerate and single-bin separations") {
  const auto flat = make_cal({1, 1, 1}, {1, 1, 1}, {1, 1, 1});
  for (double w : matched_weights(flat)) CHECK(w == 0.0);

  auto cal = make_cal({0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1});
  cal.mu1[5] = 2.0;
  const auto w = matched_weights(cal);
  for (int k = 0; k < 5; ++k) CHECK(w[static_cast<std::size_t>(k)] == 0.0);
  CHECK(w[5] == doctest::Approx(2.0));
}

TEST_CASE("matched_weights: equals the Fisher direction for diagonal covariance") {
  testutil::XorShift rng(51);
  std::vector<double> mu0(15), mu1(15), s(15);
  for (int k = 0; k < 15; ++k) {
    const auto i = static_cast<std::size_t>(k);
    mu0[i] = rng.uniform(-1.0, 1.0);
    mu1[i] = rng.uniform(-1.0, 1.0);
    s[i] = rng.uniform(0.3, 2.0);
  }
  const auto cal = make_cal(mu0, mu1, s);
  const auto w = matched_weights(cal);

  // Fisher direction: solve diag(s^2) f = (mu1 - mu0) element-wise.
  std::vector<double> fisher(15);
  for (std::size_t i = 0; i < 15; ++i) fisher[i] = (mu1[i] - mu0[i]) / (s[i] * s[i]);

  double dot = 0.0, nw = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < 15; ++i) {
    dot += w[i] * fisher[i];
    nw += w[i] * w[i];
    nf += fisher[i] * fisher[i];
  }
  CHECK(dot / std::sqrt(nw * nf) > 0.9999);
}

TEST_CASE("mac_score: arithmetic series and window masking") {
  Discriminator d;
  d.weights.assign(15, 1.0);
  d.window = {0, 14};
  d.threshold = 0.0;

  std::vector<double> zeros(15, 0.0);
  CHECK(mac_score(zeros, d) == 0.0);

  std::vector<double> ramp(15);
  for (int k = 0; k < 15; ++k) ramp[static_cast<std::size_t>(k)] = k + 1.0;
  CHECK(mac_score(ramp, d) == doctest::Approx(120.0));

  d.window = {3, 7};
  auto perturbed = ramp;
  perturbed[0] += 100.0;
  perturbed[14] -= 50.0;
  CHECK(mac_score(perturbed, d) == mac_score(ramp, d));

  std::vector<double> wrong(14, 0.0);
  CHECK_THROWS_AS(mac_score(wrong, d), ValidationError);
}

TEST_CASE("mac_score: linearity") {
  testutil::XorShift rng(3);
  Discriminator d;
  d.weights.resize(15);
  for (auto& w : d.weights) w = rng.uniform(-2.0, 2.0);
  d.window = {2, 12};
  std::vector<double> x(15), y(15);
  for (int i = 0; i < 50; ++i) {
    for (std::size_t k = 0; k < 15; ++k) {
      x[k] = rng.uniform(-5.0, 5.0);
      y[k] = rng.uniform(-5.0, 5.0);
    }
    const double alpha = rng.uniform(-3.0, 3.0);
    std::vector<double> combo(15);
    for (std::size_t k = 0; k < 15; ++k) combo[k] = alpha * x[k] + y[k];
    CHECK(mac_score(combo, d) ==
          doctest::Approx(alpha * mac_score(x, d) + mac_score(y, d)).epsilon(1e-9));
  }
}

TEST_CASE("discriminate: ties fall to state 0 and scaling is invariant") {
  CHECK(discriminate(1.5, 0.5) == 1);
  CHECK(discriminate(0.5, 0.5) == 0);
  CHECK(discriminate(-0.1, 0.0) == 0);

  testutil::XorShift rng(13);
  Discriminator d;
  d.weights.resize(15);
  for (auto& w : d.weights) w = rng.uniform(-1.0, 1.0);
  d.window = {0, 14};
  d.threshold = 0.37;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(15);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    for (const double c : {0.5, 3.0, 1e6}) {
      Discriminator scaled = d;
      for (auto& w : scaled.weights) w *= c;
      scaled.threshold *= c;
      CHECK(discriminate(mac_score(x, scaled), scaled.threshold) ==
            discriminate(mac_score(x, d), d.threshold));
    }
  }
}

TEST_CASE("discriminate: midpoint threshold balances the two error rates") {
  testutil::XorShift rng(8);
  const double m0 = 0.0, m1 = 2.0, sigma = 1.0;
  const std::size_t n = 100000;
  const double threshold = 0.5 * (m0 + m1);
  std::size_t e0 = 0, e1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (discriminate(m0 + sigma * rng.gaussian(), threshold) == 1) ++e0;
    if (discriminate(m1 + sigma * rng.gaussian(), threshold) == 0) ++e1;
  }
  const double p0 = static_cast<double>(e0) / n;
  const double p1 = static_cast<double>(e1) / n;
  const double se = std::sqrt(2.0 * p0 * (1.0 - p0) / n);
  CHECK(std::abs(p0 - p1) < 4.0 * se);
}

TEST_CASE("optimal_window: separation confined to bins 3..7") {
  std::vector<double> mu0(15, 0.0), mu1(15, 0.0), s(15, 1.0);
  for (int k = 3; k <= 7; ++k) mu1[static_cast<std::size_t>(k)] = 1.0;
  const auto cal = make_cal(mu0, mu1, s);
  const auto w = optimal_window(cal);
  CHECK(w == Window{3, 7});
  CHECK(brute_force_window(cal) == w);
}

TEST_CASE("optimal_window: uniform separation uses the full window") {
  const auto cal = make_cal(std::vector<double>(15, 0.0), std::vector<double>(15, 1.0),
                            std::vector<double>(15, 1.0));
  CHECK(optimal_window(cal) == Window{0, 14});
}

TEST_CASE("optimal_window: degenerate calibration raises") {
  const auto cal = make_cal(std::vector<double>(15, 0.5), std::vector<double>(15, 0.5),
                            std::vector<double>(15, 1.0));
  CHECK_THROWS_WITH_AS(optimal_window(cal), doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("optimal_window: matches the brute-force oracle on 100 random calibrations") {
  testutil::XorShift rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> mu0(15), mu1(15), s(15);
    for (std::size_t k = 0; k < 15; ++k) {
      mu0[k] = rng.uniform(-1.0, 1.0);
      mu1[k] = rng.uniform(-1.0, 1.0);
      s[k] = rng.uniform(0.5, 2.0);
    }
    const auto cal = make_cal(mu0, mu1, s);
    CHECK(optimal_window(cal) == brute_force_window(cal));

    // Matched weights never lose to uniform weights on the same window.
    const auto d = build_discriminator(cal);
    const auto fid_matched = fidelity_analytic(cal, d).fidelity;
    const auto fid_uniform = fidelity_analytic(cal, uniform_discriminator(cal, d.window)).fidelity;
    CHECK(fid_matched + 1e-12 >= fid_uniform);
  }
}

TEST_CASE("fidelity_analytic: indistinguishable states score one half") {
  const auto cal = make_cal(std::vector<double>(15, 1.0), std::vector<double>(15, 1.0),
                            std::vector<double>(15, 1.0));
  const auto d = uniform_discriminator(cal, {0, 14});
  CHECK(fidelity_analytic(cal, d).fidelity == doctest::Approx(0.5));
}

TEST_CASE("fidelity_analytic: separation-to-noise 6.18 hits the 99.9% point") {
  const auto cal = make_cal({0.0}, {6.18}, {1.0});
  Discriminator d;
  d.weights = {1.0};
  d.window = {0, 0};
  d.threshold = 3.09;
  CHECK(score_snr(cal, d) == doctest::Approx(6.18));
  const auto est = fidelity_analytic(cal, d);
  CHECK(std::abs(est.fidelity - 0.999) < 1e-4);
}

TEST_CASE("fidelity_analytic: noiseless separated plant is perfect, degenerate rejects") {
  const auto cal = make_cal({0.0}, {1.0}, {0.0});
  Discriminator d;
  d.weights = {1.0};
  d.window = {0, 0};
  CHECK(fidelity_analytic(cal, d).fidelity == 1.0);

  const auto degenerate = make_cal({0.5}, {0.5}, {0.0});
  CHECK_THROWS_AS(fidelity_analytic(degenerate, d), ValidationError);
}

TEST_CASE("fidelity_analytic: monotone non-decreasing in the separation") {
  double last = 0.0;
  for (const double delta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto cal = make_cal(std::vector<double>(15, 0.0), std::vector<double>(15, delta),
                              std::vector<double>(15, 1.0));
    const auto d = uniform_discriminator(cal, {0, 14});
    const double fid = fidelity_analytic(cal, d).fidelity;
    CHECK(fid >= last);
    last = fid;
  }
}

namespace {

Plant uniform_plant(double per_bin_delta, double sigma) {
  Plant plant;
  plant.model.f_readout_hz = 6e9;
  plant.model.n_bins = 15;
  plant.model.bin_duration_s = 2e-9;  // one ADC sample per bin at 500 MHz
  plant.model.m0_v.assign(15, 0.0);
  plant.model.m1_v.assign(15, per_bin_delta);
  plant.model.sigma_in_v.assign(15, sigma);
  plant.cascade.stages = {{"unit", 0.0, 0.0, 11.5e9, 0.0, 50.0}};
  plant.adc.sample_rate_hz = 500e6;
  plant.adc.quantizer = {24, 64.0};
  return plant;
}

CalibrationData plant_truth(const Plant& plant) {
  CalibrationData cal;
  cal.n_bins = plant.model.n_bins;
  cal.mu0 = plant.model.m0_v;
  cal.mu1 = plant.model.m1_v;
  cal.s = plant.model.sigma_in_v;
  cal.n_shots0 = cal.n_shots1 = 2;
  return cal;
}

}  // namespace

TEST_CASE("fidelity_monte_carlo: determinism and the noiseless edge") {
  const auto plant = uniform_plant(1.0, 0.5);
  const auto cal = plant_truth(plant);
  const auto d = build_discriminator(cal);

  const auto a = fidelity_monte_carlo(plant, d, 500, 77);
  const auto b = fidelity_monte_carlo(plant, d, 500, 77);
  CHECK(a.fidelity == b.fidelity);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);

  const auto noiseless = uniform_plant(1.0, 0.0);
  const auto dn = build_discriminator(plant_truth(noiseless));
  CHECK(fidelity_monte_carlo(noiseless, dn, 200, 1).fidelity == 1.0);

  CHECK_THROWS_AS(fidelity_monte_carlo(plant, d, 50, 1), ValidationError);
}

TEST_CASE("fidelity_monte_carlo: agrees with the analytic estimate over an SNR sweep") {
  for (const double target_snr : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const double delta = target_snr / std::sqrt(15.0);
    const auto plant = uniform_plant(delta, 1.0);
    const auto cal = plant_truth(plant);
    const auto d = build_discriminator(cal);

    const auto fa = fidelity_analytic(cal, d);
    const std::size_t n = 20000;
    const auto fmc = fidelity_monte_carlo(plant, d, n, 1234);

    const double p = 1.0 - fa.fidelity;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / (2.0 * n));
    CHECK(std::abs(fmc.fidelity - fa.fidelity) < 3.0 * se);
  }
}

TEST_CASE("calibration CSV round-trips") {
  testutil::XorShift rng(4);
  std::vector<std::vector<double>> shots0(3, std::vector<double>(5));
  std::vector<std::vector<double>> shots1(2, std::vector<double>(5));
  for (auto& shot : shots0) {
    for (auto& v : shot) v = rng.uniform(-1e-3, 1e-3);
  }
  for (auto& shot : shots1) {
    for (auto& v : shot) v = rng.uniform(-1e-3, 1e-3);
  }
  std::ostringstream out;
  write_calibration_csv(out, shots0, shots1);
  std::istringstream in(out.str());
  const auto [r0, r1] = read_calibration_csv(in);
  CHECK(r0 == shots0);
  CHECK(r1 == shots1);
}

TEST_CASE("discriminator CSV round-trips bit-exactly") {
  testutil::XorShift rng(6);
  Discriminator d;
  d.weights.resize(15);
  for (auto& w : d.weights) w = rng.uniform(-1.0, 1.0) * 1e-7;
  d.window = {2, 11};
  d.threshold = rng.uniform(-1.0, 1.0) * 1e-5;

  std::ostringstream out;
  write_discriminator_csv(out, d);
  std::istringstream in(out.str());
  const auto r = read_discriminator_csv(in);
  CHECK(r.weights == d.weights);
  CHECK(r.window == d.window);
  CHECK(r.threshold == d.threshold);
}
