#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace flowlab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

// 64-bit child id derived from (parent, index, tag).
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index, std::uint32_t tag = 0);

namespace stream_tag {
inline constexpr std::uint32_t path = 1;
inline constexpr std::uint32_t refine = 2;
inline constexpr std::uint32_t refine_node = 3;
inline constexpr std::uint32_t outer = 4;
inline constexpr std::uint32_t inner = 5;
inline constexpr std::uint32_t sample = 6;
inline constexpr std::uint32_t node = 7;
}  // namespace stream_tag

// Sequential normals and uniforms from the counter space of (seed, stream).
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t stream);

  Substream child(std::uint64_t index, std::uint32_t tag = 0) const {
    return Substream(seed_, derive_stream(stream_, index, tag));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double uniform();   // in (0,1)
  double normal();
  void fill_normal(std::span<double> out);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> uniforms_{};
  int available_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace flowlab
