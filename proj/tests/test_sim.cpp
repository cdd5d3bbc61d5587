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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include "biohub/error.hpp"
#include "biohub/sim.hpp"

namespace biohub::sim
{
namespace
{

// Test oracle: plain O(n^2) DFT magnitude-squared of the mean-removed signal.
std::vector<double> periodogram(const std::vector<float> & x)
{
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) /
        static_cast<double>(n);
      acc += (x[i] - mean) * std::complex<double>(std::cos(a), std::sin(a));
    }
    p[k] = std::norm(acc);
  }
  return p;
}

double dominant_hz(const std::vector<float> & x, double rate)
{
  const auto p = periodogram(x);
  const auto k = std::max_element(p.begin() + 1, p.end()) - p.begin();
  return static_cast<double>(k) * rate / static_cast<double>(x.size());
}

std::size_t count_peaks(const std::vector<float> & x, double rate, float threshold)
{
  std::size_t peaks = 0;
  const auto refractory = static_cast<std::size_t>(0.25 * rate);
  std::size_t last = 0;
  bool any = false;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > threshold && x[i] >= x[i - 1] && x[i] > x[i + 1] &&
      (!any || i - last > refractory))
    {
      ++peaks;
      last = i;
      any = true;
    }
  }
  return peaks;
}

SimConfig with_seed(std::uint64_t seed)
{
  SimConfig c;
  c.seed = seed;
  return c;
}

TEST(SimRng, NormalIsStandard)
{
  SimRng rng(5, 0);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(SimRng, FrozenFirstDraws)
{
  // Frozen so fixture streams stay stable across releases (RNG v1).
  SimRng a(1, 1);
  SimRng b(1, 1);
  SimRng c(1, 2);
  const double first = a.uniform();
  EXPECT_EQ(first, b.uniform());
  EXPECT_NE(first, c.uniform());
  EXPECT_EQ(SimRng::kVersion, 1);
}

TEST(Generators, AreDeterministicPerSeed)
{
  EXPECT_EQ(gen_ppg(with_seed(1), 64, 500), gen_ppg(with_seed(1), 64, 500));
  EXPECT_EQ(gen_ecg(with_seed(1), 256, 500), gen_ecg(with_seed(1), 256, 500));
  EXPECT_EQ(gen_gsr(with_seed(1), 4, 500), gen_gsr(with_seed(1), 4, 500));
  EXPECT_EQ(gen_respiration_force(with_seed(1), 50, 500),
    gen_respiration_force(with_seed(1), 50, 500));
  EXPECT_EQ(gen_eeg(with_seed(1), 128, 5, 300), gen_eeg(with_seed(1), 128, 5, 300));
  EXPECT_NE(gen_ppg(with_seed(1), 64, 500), gen_ppg(with_seed(2), 64, 500));
}

TEST(Generators, BatchIsStreamingPrefix)
{
  const auto batch = gen_ecg(with_seed(9), 256, 1000);
  EcgGenerator g(with_seed(9), 256);
  for (float v : batch) {
    ASSERT_EQ(v, g.next());
  }
}

TEST(Generators, RejectBadRates)
{
  EXPECT_THROW(gen_ppg(with_seed(1), 0.0, 10), ConfigError);
  EXPECT_THROW(gen_ecg(with_seed(1), -1.0, 10), ConfigError);
  SimConfig bad;
  bad.noise_sigma = -0.1f;
  EXPECT_THROW(gen_gsr(bad, 4, 10), ConfigError);
  bad = SimConfig{};
  bad.heart_rate_bpm = 0.0f;
  EXPECT_THROW(gen_ppg(bad, 64, 10), ConfigError);
}

TEST(Ppg, DominantPeakAtHeartRate)
{
  SimConfig cfg = with_seed(3);
  cfg.heart_rate_bpm = 60.0f;
  const auto x = gen_ppg(cfg, 64.0, 640);
  EXPECT_NEAR(dominant_hz(x, 64.0), 1.0, 0.1);
}

TEST(Ppg, NoiselessIsExactlyPeriodic)
{
  SimConfig cfg = with_seed(3);
  cfg.heart_rate_bpm = 60.0f;
  cfg.noise_sigma = 0.0f;
  const std::size_t period = 64;  // rate * 60 / HR
  const auto x = gen_ppg(cfg, 64.0, period * 10);
  for (std::size_t k = 0; k + period < x.size(); ++k) {
    ASSERT_NEAR(x[k], x[k + period], 1e-6) << k;
  }
}

TEST(Ecg, PeakCountMatchesHeartRate)
{
  for (float hr : {60.0f, 75.0f, 110.0f}) {
    SimConfig cfg = with_seed(4);
    cfg.heart_rate_bpm = hr;
    const auto x = gen_ecg(cfg, 256.0, 256 * 60);
    const double expected = hr;  // per 60 s
    EXPECT_NEAR(static_cast<double>(count_peaks(x, 256.0, 0.5f)), expected, 1.0) << hr;
  }
}

TEST(Ecg, AmplitudeBounded)
{
  SimConfig cfg = with_seed(4);
  cfg.noise_sigma = 0.5f;
  for (float v : gen_ecg(cfg, 256.0, 256 * 30)) {
    ASSERT_LE(std::abs(v), 2.0f);
  }
}

TEST(Respiration, QuantizedAndInRange)
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (float v : gen_respiration_force(with_seed(seed), 50.0, 50 * 120)) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 50.0f);
      const double grid = 0.01 * std::round(static_cast<double>(v) / 0.01);
      ASSERT_NEAR(v, grid, 1e-6);
    }
  }
}

TEST(Respiration, SpectralPeakAtBreathRate)
{
  SimConfig cfg = with_seed(6);
  cfg.breath_rate_bpm = 15.0f;
  const auto x = gen_respiration_force(cfg, 50.0, 50 * 60);
  EXPECT_NEAR(dominant_hz(x, 50.0), 0.25, 0.02);
}

TEST(Gsr, NonNegativeWithMeanNearBaseline)
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig cfg = with_seed(seed);
    cfg.noise_sigma = 0.3f;
    const auto x = gen_gsr(cfg, 4.0, 4 * 60);
    for (float v : x) {
      ASSERT_GE(v, 0.0f);
    }
    cfg.noise_sigma = 0.02f;
    const auto y = gen_gsr(cfg, 4.0, 4 * 60);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    EXPECT_NEAR(mean, cfg.gsr_baseline_uS, 0.2 * cfg.gsr_baseline_uS) << seed;
  }
}

TEST(Eeg, FourteenBitGridAndChannelCount)
{
  const auto x = gen_eeg(with_seed(8), 128.0, 5, 128 * 20);
  const double step = 200.0 / 16384.0;
  std::vector<std::set<float>> distinct(5);
  for (const auto & s : x) {
    ASSERT_EQ(s.size(), 5u);
    for (std::size_t c = 0; c < 5; ++c) {
      distinct[c].insert(s[c]);
      const double q = (s[c] + 100.0) / step;
      ASSERT_NEAR(q, std::round(q), 1e-3);
    }
  }
  for (const auto & d : distinct) {
    EXPECT_LE(d.size(), 16384u);
  }
}

TEST(Eeg, AlphaDominantConfigHasLargestAlphaPower)
{
  const double rate = 128.0;
  const auto x = gen_eeg(with_seed(8), rate, 5, 256 * 2);
  const double edges[6] = {4, 8, 12, 16, 25, 45};
  for (std::size_t c = 0; c < 5; ++c) {
    std::vector<float> ch;
    for (const auto & s : x) {
      ch.push_back(s[c]);
    }
    const auto p = periodogram(ch);
    double power[5] = {};
    for (std::size_t k = 1; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * rate / static_cast<double>(ch.size());
      for (int b = 0; b < 5; ++b) {
        if (f >= edges[b] && f < edges[b + 1]) {
          power[b] += p[k];
        }
      }
    }
    for (int b = 0; b < 5; ++b) {
      if (b != 1) {
        EXPECT_GT(power[1], power[b]) << "channel " << c << " band " << b;
      }
    }
  }
}

TEST(Ibi, MeanMatchesHeartRate)
{
  SimConfig cfg = with_seed(2);
  cfg.heart_rate_bpm = 75.0f;
  IbiGenerator g(cfg);
  double sum = 0.0;
  for (int i = 0; i < 750; ++i) {
    sum += g.next();
  }
  EXPECT_NEAR(sum / 750.0, 0.8, 0.01);
}

}  // namespace
}  // namespace biohub::sim
