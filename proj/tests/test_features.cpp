// Copyright 2026 The biohub Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "biohub/error.hpp"
#include "biohub/features.hpp"
#include "biohub/sim.hpp"

namespace biohub::features
{
namespace
{

// Textbook two-pass formulas in long double; the oracles for the HRV tests.
long double oracle_mean(const std::vector<double> & x)
{
  long double s = 0.0L;
  for (double v : x) {
    s += v;
  }
  return s / static_cast<long double>(x.size());
}

long double oracle_sdnn_ms(const std::vector<double> & x)
{
  const long double m = oracle_mean(x);
  long double s = 0.0L;
  for (double v : x) {
    s += (v - m) * (v - m);
  }
  return 1000.0L * std::sqrt(s / static_cast<long double>(x.size()));
}

long double oracle_rmssd_ms(const std::vector<double> & x)
{
  long double s = 0.0L;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const long double d = static_cast<long double>(x[i]) - x[i - 1];
    s += d * d;
  }
  return 1000.0L * std::sqrt(s / static_cast<long double>(x.size() - 1));
}

std::vector<float> sinusoid(double freq, double rate, std::size_t n, double amp = 1.0,
  double phase = 0.0, double offset = 0.0)
{
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(offset + amp * std::sin(2.0 * std::numbers::pi * freq *
      static_cast<double>(i) / rate + phase));
  }
  return x;
}

double share(const std::vector<double> & p, std::size_t i)
{
  double total = 0.0;
  for (double v : p) {
    total += v;
  }
  return p[i] / total;
}

TEST(MeanHr, SimpleSeries)
{
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(mean_hr_from_ibi(ones), 60.0);
  const std::vector<double> halves(17, 0.5);
  EXPECT_DOUBLE_EQ(mean_hr_from_ibi(halves), 120.0);
  EXPECT_THROW(mean_hr_from_ibi(std::vector<double>{}), InsufficientData);
  EXPECT_THROW(mean_hr_from_ibi(std::vector<double>{1.0, 0.0}), InvalidData);
}

TEST(Hrv, ConstantSeriesIsZero)
{
  const std::vector<double> c(30, 0.83);
  EXPECT_EQ(sdnn_ms(c), 0.0);
  EXPECT_EQ(rmssd_ms(c), 0.0);
}

TEST(Hrv, SingleDifference)
{
  EXPECT_NEAR(rmssd_ms(std::vector<double>{1.0, 1.1}), 100.0, 1e-9);
  EXPECT_NEAR(sdnn_ms(std::vector<double>{1.0, 1.1}), 50.0, 1e-9);
}

TEST(Hrv, TooFewIntervals)
{
  EXPECT_THROW(sdnn_ms(std::vector<double>{1.0}), InsufficientData);
  EXPECT_THROW(rmssd_ms(std::vector<double>{1.0}), InsufficientData);
}

TEST(Hrv, MatchesTextbookFormulas)
{
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> base(0.5, 1.2);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + rng() % 200);
    const double b = base(rng);
    for (auto & v : x) {
      v = std::max(0.3, b + jitter(rng));
    }
    const double hr = mean_hr_from_ibi(x);
    EXPECT_NEAR(hr, static_cast<double>(60.0L / oracle_mean(x)), 1e-9 * hr);
    const double sd = sdnn_ms(x);
    EXPECT_NEAR(sd, static_cast<double>(oracle_sdnn_ms(x)), 1e-9 * sd + 1e-12);
    const double rm = rmssd_ms(x);
    EXPECT_NEAR(rm, static_cast<double>(oracle_rmssd_ms(x)), 1e-9 * rm + 1e-12);
  }
}

TEST(BreathRate, PureSinusoid)
{
  for (double span : {20.0, 30.0, 60.0}) {
    const auto x = sinusoid(0.25, 50.0, static_cast<std::size_t>(50.0 * span), 5.0, 0.3, 15.0);
    const auto est = breath_rate_estimates({x, 50.0});
    EXPECT_NEAR(est.periodogram_bpm, 15.0, 0.5) << span;
    EXPECT_NEAR(est.zero_crossing_bpm, 15.0, 1.6) << span;
  }
}

TEST(BreathRate, RecoversSimulatorParameter)
{
  for (float bpm : {8.0f, 12.0f, 15.0f, 20.0f}) {
    sim::SimConfig cfg;
    cfg.seed = 21;
    cfg.breath_rate_bpm = bpm;
    const auto x = sim::gen_respiration_force(cfg, 50.0, 50 * 30);
    EXPECT_NEAR(breath_rate({x, 50.0}), bpm, 1.0) << bpm;
  }
}

TEST(BreathRate, Errors)
{
  const std::vector<float> flat(50 * 30, 12.0f);
  EXPECT_THROW(breath_rate({flat, 50.0}), InsufficientData);
  const auto short_x = sinusoid(0.25, 50.0, 50 * 10);
  EXPECT_THROW(breath_rate({short_x, 50.0}), InsufficientData);
}

TEST(BandPower, TenHzIsAlpha)
{
  const auto x = sinusoid(10.0, 128.0, 256);
  const auto p = band_power({x, 128.0});
  ASSERT_EQ(p.size(), 5u);
  EXPECT_GT(share(p, 1), 0.9);
}

TEST(BandPower, EachBandCentreWins)
{
  const double centres[5] = {6.0, 10.0, 14.0, 20.0, 35.0};
  for (std::size_t b = 0; b < 5; ++b) {
    const auto x = sinusoid(centres[b], 128.0, 512, 1.0, 0.7);
    const auto p = band_power({x, 128.0});
    EXPECT_GT(share(p, b), 0.9) << b;
  }
}

TEST(BandPower, ZeroSignal)
{
  const std::vector<float> z(256, 0.0f);
  for (double v : band_power({z, 128.0})) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(BandPower, Errors)
{
  const std::vector<float> x(256, 1.0f);
  EXPECT_THROW(band_power({x, 64.0}), ConfigError);   // gamma edge 45 Hz > 32 Hz
  const std::vector<float> short_x(128, 1.0f);
  EXPECT_THROW(band_power({short_x, 128.0}), InsufficientData);
}

TEST(BandPower, WhiteNoiseHasNoDominantBand)
{
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    sim::SimRng rng(seed, 77);
    std::vector<float> x(256);
    for (auto & v : x) {
      v = static_cast<float>(rng.normal());
    }
    const auto p = band_power({x, 128.0});
    for (std::size_t b = 0; b < p.size(); ++b) {
      ASSERT_LE(share(p, b), 0.6) << "seed " << seed << " band " << b;
    }
  }
}

TEST(BandPower, ParsevalBound)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> x(256 + rng() % 512);
    const double f = 1.0 + static_cast<double>(rng() % 5000) / 100.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<float>(n(rng) * (trial % 2) +
        10.0 * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / 128.0) + 2.0);
    }
    double total = 0.0;
    for (float v : x) {
      total += static_cast<double>(v) * v;
    }
    total /= static_cast<double>(x.size());
    double sum = 0.0;
    for (double v : band_power({x, 128.0})) {
      sum += v;
    }
    ASSERT_LE(sum, total + 1e-6);
  }
}

TEST(BandPower, ShiftInvariantForStationarySinusoids)
{
  for (double f : {6.3, 10.0, 10.7, 21.1, 33.3}) {
    const auto x = sinusoid(f, 128.0, 256 + 64, 1.0, 0.2);
    const std::vector<float> a(x.begin(), x.begin() + 256);
    for (std::size_t k : {1u, 7u, 13u, 40u, 64u}) {
      const std::vector<float> b(x.begin() + static_cast<std::ptrdiff_t>(k),
        x.begin() + static_cast<std::ptrdiff_t>(k + 256));
      const auto pa = band_power({a, 128.0});
      const auto pb = band_power({b, 128.0});
      for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i] > 1e-3 * (pa[0] + pa[1] + pa[2] + pa[3] + pa[4])) {
          EXPECT_NEAR(pb[i], pa[i], 0.05 * pa[i]) << f << " " << k << " band " << i;
        }
      }
    }
  }
}

}  // namespace
}  // namespace biohub::features
