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

#ifndef BIOHUB__FEATURES_HPP_
#define BIOHUB__FEATURES_HPP_

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace biohub::features
{

/// Evenly sampled signal segment.
struct Window
{
  std::span<const float> samples;
  double rate_hz = 0.0;

  double span_s() const noexcept
  {
    return rate_hz > 0.0 ? static_cast<double>(samples.size()) / rate_hz : 0.0;
  }
};

/// Half-open frequency band [lo_hz, hi_hz).
struct Band
{
  std::string_view name;
  double lo_hz;
  double hi_hz;
};

inline constexpr std::array<Band, 5> kEegBands{{
  {"theta", 4.0, 8.0},
  {"alpha", 8.0, 12.0},
  {"low_beta", 12.0, 16.0},
  {"high_beta", 16.0, 25.0},
  {"gamma", 25.0, 45.0},
}};

/// 60 / mean(ibi). Throws InsufficientData when empty, InvalidData on a
/// non-positive interval.
double mean_hr_from_ibi(std::span<const double> ibi_s);

/// Population standard deviation of the intervals, in milliseconds.
/// Needs at least 2 intervals.
double sdnn_ms(std::span<const double> ibi_s);

/// Root mean square of successive differences, in milliseconds.
/// Needs at least 2 intervals.
double rmssd_ms(std::span<const double> ibi_s);

struct BreathRateEstimate
{
  /// Peak of a Hann-windowed fine-grid periodogram of the detrended signal.
  double periodogram_bpm = 0.0;
  /// Half the hysteresis zero-crossing count per minute.
  double zero_crossing_bpm = 0.0;
};

/// Both breathing-rate estimates for a force window of at least 20 s.
/// Throws InsufficientData for short or flat (variance < 1e-6) windows.
BreathRateEstimate breath_rate_estimates(const Window & force);

/// Breaths per minute; returns the periodogram estimate.
double breath_rate(const Window & force);

/// Mean one-sided periodogram power of the Hann-windowed signal over the DFT
/// bins inside each band, in band order. Bin powers are scaled so that their
/// sum never exceeds the mean squared signal.
///
/// Throws ConfigError when a band reaches past Nyquist and InsufficientData
/// when the window is shorter than 2 s.
std::vector<double> band_power(const Window & eeg, std::span<const Band> bands = kEegBands);

}  // namespace biohub::features

#endif  // BIOHUB__FEATURES_HPP_
