#include "flowlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace flowlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline PhiloxKey split(std::uint64_t v) {
  return {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index, std::uint32_t tag) {
  const PhiloxKey idx = split(index);
  const PhiloxCounter out = philox4x32({idx[0], idx[1], tag, 0x5EED5EEDu}, split(parent));
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Substream::Substream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void Substream::refill() {
  const PhiloxKey s = split(stream_);
  const PhiloxCounter out = philox4x32(
      {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), s[0], s[1]},
      split(seed_));
  ++block_;
  for (int i = 0; i < 2; ++i) {
    const std::uint64_t bits =
        ((static_cast<std::uint64_t>(out[2 * i]) << 32) | out[2 * i + 1]) >> 11;
    uniforms_[i] = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }
  available_ = 2;
}

double Substream::uniform() {
  if (available_ == 0) refill();
  return uniforms_[2 - available_--];
}

double Substream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

void Substream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

}  // namespace flowlab
