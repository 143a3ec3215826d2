#pragma once

#include <complex>
#include <cstdint>

namespace qcsim {

/// Counter-based random stream: draw k is a pure function of
/// (seed, stream_id, k). Distinct stream ids give statistically independent
/// sequences, so adding a consumer never perturbs the values seen by another.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double next_unit();

  /// Standard normal. Consumes two counters.
  double next_gaussian();

  /// Independent standard normals in the real and imaginary parts.
  /// Consumes two counters (one Box-Muller pair).
  std::complex<double> next_complex_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Number of raw 64-bit draws consumed so far.
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace qcsim
