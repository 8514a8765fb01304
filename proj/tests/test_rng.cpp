#include "flowlab/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace flowlab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Two-sided KS statistic scaled by sqrt(n).
template <typename Cdf>
double ks_statistic(std::vector<double> v, Cdf cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max(d, std::max(f - i / n, (i + 1) / n - f));
  }
  return d * std::sqrt(n);
}

}  // namespace

TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Substream, Deterministic) {
  Substream a(7, 3), b(7, 3), c(7, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs = differs || x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Substream, DeriveStreamSeparatesTags) {
  EXPECT_NE(derive_stream(1, 0, stream_tag::path), derive_stream(1, 0, stream_tag::refine));
  EXPECT_NE(derive_stream(1, 0), derive_stream(1, 1));
  EXPECT_EQ(derive_stream(5, 9, 2), derive_stream(5, 9, 2));
}

TEST(Substream, UniformInOpenInterval) {
  Substream s(1, 1);
  std::vector<double> u(100000);
  for (auto& x : u) {
    x = s.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
  EXPECT_LT(ks_statistic(u, [](double x) { return x; }), 1.628);
}

TEST(Substream, NormalPassesKs) {
  Substream s(2024, 11);
  std::vector<double> z(100000);
  s.fill_normal(z);
  EXPECT_LT(ks_statistic(z, normal_cdf), 1.628);
}
