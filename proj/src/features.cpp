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

#include "biohub/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "biohub/error.hpp"

namespace biohub::features
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_intervals(std::span<const double> ibi_s, std::size_t min_count, const char * what)
{
  if (ibi_s.size() < min_count) {
    throw InsufficientData(std::string(what) + " needs at least " + std::to_string(min_count) +
            " intervals, got " + std::to_string(ibi_s.size()));
  }
  for (double v : ibi_s) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidData(std::string(what) + ": intervals must be positive and finite");
    }
  }
}

double hann(std::size_t n, std::size_t len)
{
  return 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(n) / static_cast<double>(len)));
}

// Least-squares line removed.
std::vector<double> detrend(std::span<const float> x)
{
  const auto n = static_cast<double>(x.size());
  const double t_mean = (n - 1.0) / 2.0;
  double x_mean = 0.0;
  for (float v : x) {
    x_mean += v;
  }
  x_mean /= n;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    num += dt * (x[i] - x_mean);
    den += dt * dt;
  }
  const double slope = den > 0.0 ? num / den : 0.0;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - x_mean - slope * (static_cast<double>(i) - t_mean);
  }
  return out;
}

double periodogram_at(std::span<const double> windowed, double rate_hz, double f_hz)
{
  std::complex<double> acc{0.0, 0.0};
  const double w = -kTwoPi * f_hz / rate_hz;
  // Recurrence keeps this O(n) without a sin/cos per sample.
  const std::complex<double> step{std::cos(w), std::sin(w)};
  std::complex<double> phasor{1.0, 0.0};
  for (std::size_t i = 0; i < windowed.size(); ++i) {
    acc += windowed[i] * phasor;
    phasor *= step;
    if ((i & 0xFF) == 0xFF) {
      phasor /= std::abs(phasor);
    }
  }
  return std::norm(acc);
}

}  // namespace

double mean_hr_from_ibi(std::span<const double> ibi_s)
{
  check_intervals(ibi_s, 1, "mean_hr_from_ibi");
  double mean = 0.0;
  std::size_t n = 0;
  for (double v : ibi_s) {
    mean += (v - mean) / static_cast<double>(++n);
  }
  return 60.0 / mean;
}

double sdnn_ms(std::span<const double> ibi_s)
{
  check_intervals(ibi_s, 2, "sdnn");
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : ibi_s) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  return 1000.0 * std::sqrt(m2 / static_cast<double>(n));
}

double rmssd_ms(std::span<const double> ibi_s)
{
  check_intervals(ibi_s, 2, "rmssd");
  double acc = 0.0;
  for (std::size_t i = 1; i < ibi_s.size(); ++i) {
    const double d = ibi_s[i] - ibi_s[i - 1];
    acc += d * d;
  }
  return 1000.0 * std::sqrt(acc / static_cast<double>(ibi_s.size() - 1));
}

BreathRateEstimate breath_rate_estimates(const Window & force)
{
  constexpr double kMinSpan = 20.0;
  constexpr double kLoHz = 0.05;
  constexpr double kHiHz = 1.5;
  constexpr double kGridHz = 0.002;

  if (!(force.rate_hz > 0.0)) {
    throw ConfigError("breath_rate needs a positive sample rate");
  }
  if (force.span_s() + 1e-9 < kMinSpan) {
    throw InsufficientData("breath_rate needs at least 20 s, got " +
            std::to_string(force.span_s()) + " s");
  }
  if (2.0 * kHiHz > force.rate_hz) {
    throw ConfigError("sample rate too low for breathing band");
  }
  const std::vector<double> x = detrend(force.samples);
  double var = 0.0;
  for (double v : x) {
    var += v * v;
  }
  var /= static_cast<double>(x.size());
  if (var < 1e-6) {
    throw InsufficientData("flat respiration signal");
  }

  BreathRateEstimate est;

  // Zero crossings with a hysteresis band of 10% of the standard deviation.
  const double hyst = 0.1 * std::sqrt(var);
  int state = 0;
  std::size_t crossings = 0;
  for (double v : x) {
    const int s = v > hyst ? 1 : (v < -hyst ? -1 : 0);
    if (s != 0) {
      if (state != 0 && s != state) {
        ++crossings;
      }
      state = s;
    }
  }
  est.zero_crossing_bpm = 60.0 * (static_cast<double>(crossings) / 2.0) / force.span_s();

  std::vector<double> windowed(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    windowed[i] = x[i] * hann(i, x.size());
  }
  const auto steps = static_cast<std::size_t>(std::round((kHiHz - kLoHz) / kGridHz));
  std::vector<double> p(steps + 1);
  std::size_t best = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    p[i] = periodogram_at(windowed, force.rate_hz, kLoHz + kGridHz * static_cast<double>(i));
    if (p[i] > p[best]) {
      best = i;
    }
  }
  double offset = 0.0;
  if (best > 0 && best < steps) {
    const double denom = p[best - 1] - 2.0 * p[best] + p[best + 1];
    if (denom < 0.0) {
      offset = 0.5 * (p[best - 1] - p[best + 1]) / denom;
    }
  }
  est.periodogram_bpm = 60.0 * (kLoHz + kGridHz * (static_cast<double>(best) + offset));
  return est;
}

double breath_rate(const Window & force)
{
  return breath_rate_estimates(force).periodogram_bpm;
}

std::vector<double> band_power(const Window & eeg, std::span<const Band> bands)
{
  if (!(eeg.rate_hz > 0.0)) {
    throw ConfigError("band_power needs a positive sample rate");
  }
  const double nyquist = eeg.rate_hz / 2.0;
  for (const auto & b : bands) {
    if (b.hi_hz > nyquist) {
      throw ConfigError("band " + std::string(b.name) + " reaches past Nyquist (" +
              std::to_string(nyquist) + " Hz)");
    }
  }
  if (eeg.span_s() + 1e-9 < 2.0) {
    throw InsufficientData("band_power needs at least 2 s of signal");
  }
  const std::size_t n = eeg.samples.size();
  const auto nd = static_cast<double>(n);
  const double bin_hz = eeg.rate_hz / nd;

  std::vector<double> windowed(n);
  for (std::size_t i = 0; i < n; ++i) {
    windowed[i] = eeg.samples[i] * hann(i, n);
  }

  std::vector<double> out;
  out.reserve(bands.size());
  for (const auto & b : bands) {
    const auto k_lo = static_cast<std::size_t>(std::max(1.0, std::ceil(b.lo_hz / bin_hz - 1e-9)));
    double sum = 0.0;
    std::size_t bins = 0;
    for (std::size_t k = k_lo; static_cast<double>(k) * bin_hz < b.hi_hz - 1e-9 && 2 * k <= n;
      ++k)
    {
      const double scale = (2 * k == n) ? 1.0 : 2.0;
      sum += scale * periodogram_at(windowed, eeg.rate_hz, static_cast<double>(k) * bin_hz) /
        (nd * nd);
      ++bins;
    }
    if (bins == 0) {
      throw InsufficientData("window too short to resolve band " + std::string(b.name));
    }
    out.push_back(sum / static_cast<double>(bins));
  }
  return out;
}

}  // namespace biohub::features
