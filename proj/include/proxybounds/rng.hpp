#pragma once

#include <cstdint>

namespace proxybounds {

/// Named sub-stream domains. Every random quantity in the library is drawn
/// from a stream derived as a pure function of (master seed, domain, index),
/// which makes results independent of thread count and evaluation order.
enum class StreamDomain : std::uint64_t {
  dgp_row = 1,
  bootstrap = 2,
  normal_draw = 3,
  sim_rep = 4,
  sim_inference = 5,
  spec_search = 6,
};

std::uint64_t derive_stream(std::uint64_t master_seed, StreamDomain domain,
                            std::uint64_t index);

/// Inverse of the standard normal CDF (Wichura's AS 241 rational
/// approximations, double precision). Requires p in (0, 1).
double standard_normal_quantile(double p);

/// xoshiro256++ seeded through splitmix64. Small, fast, and fully
/// reproducible across platforms; normal deviates use the inverse-CDF map
/// so no hidden distribution state exists.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double next_double();

  /// Uniform on (0, 1), never exactly 0 or 1.
  double next_open_double();

  /// Standard normal deviate.
  double next_normal();

  /// Unbiased uniform integer in [0, n). Requires n >= 1.
  std::uint64_t next_index(std::uint64_t n);

 private:
  std::uint64_t state_[4];
};

}  // namespace proxybounds
