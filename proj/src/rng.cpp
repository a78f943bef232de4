#include "holang/rng.hpp"

#include <cmath>

namespace holang::rng {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  return static_cast<std::uint64_t>(p);
}

inline void round_once(Philox4x64::Counter& x, const Philox4x64::Key& k) {
  std::uint64_t hi0, hi1;
  const std::uint64_t lo0 = mulhilo(kMul0, x[0], hi0);
  const std::uint64_t lo1 = mulhilo(kMul1, x[2], hi1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

Philox4x64::Counter Philox4x64::block(Counter ctr, Key key) {
  for (int r = 0; r < 9; ++r) {
    round_once(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  round_once(ctr, key);
  return ctr;
}

std::uint64_t stream_id(Purpose p, std::uint32_t channel, std::uint64_t trajectory) {
  return (static_cast<std::uint64_t>(p) << 56) |
         (static_cast<std::uint64_t>(channel & 0xFFFFu) << 40) |
         (trajectory & 0xFFFFFFFFFFULL);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : key_{seed, stream}, ctr_{0, 0, 0, 0} {}

void NormalStream::refill() {
  buf_ = Philox4x64::block(ctr_, key_);
  // 256-bit little-endian counter increment.
  for (int i = 0; i < 4; ++i) {
    if (++ctr_[i] != 0) break;
  }
  buf_pos_ = 0;
}

std::uint64_t NormalStream::next_u64() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

double NormalStream::next_uniform() {
  // (raw >> 11) in [0, 2^53); +1 maps to (0, 2^53], so the result is in (0,1].
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double NormalStream::next_normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  have_cached_ = true;
  return r * std::cos(theta);
}

double NormalStream::next_in(double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
}

}  // namespace holang::rng
