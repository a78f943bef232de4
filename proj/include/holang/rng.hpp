#pragma once

// Counter-based random number generation (Philox4x64-10).
//
// Every consumer of randomness gets its own stream, addressed by
// (master seed, purpose, channel, trajectory). Streams are stateless
// block functions of a 256-bit counter, so ensembles are reproducible
// bit-for-bit regardless of scheduling, and workers never share state.

#include <array>
#include <cstdint>

namespace holang::rng {

struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  // One keyed block: 10 rounds, returns 4 x 64-bit words.
  static Counter block(Counter ctr, Key key);
};

// Stream purposes keep logically distinct draws on disjoint keys.
enum class Purpose : std::uint64_t {
  white = 1,
  aux = 2,
  mix = 3,
  test = 4,
  scratch = 5,
};

// Structurally unique stream id: purpose | channel | trajectory.
// channel < 2^16, trajectory < 2^40.
std::uint64_t stream_id(Purpose p, std::uint32_t channel, std::uint64_t trajectory);

// Sequential view of one Philox stream: uniform and Gaussian draws.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on (0,1], 53-bit resolution.
  double next_uniform();
  // Standard normal via Box-Muller (pairs cached).
  double next_normal();
  // Uniform on [lo, hi).
  double next_in(double lo, double hi);

 private:
  Philox4x64::Key key_;
  Philox4x64::Counter ctr_;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_ = false;

  void refill();
};

}  // namespace holang::rng
