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

#ifndef BIOHUB__DRIVERS_HPP_
#define BIOHUB__DRIVERS_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biohub/node.hpp"
#include "biohub/sim.hpp"

namespace biohub
{

inline constexpr std::string_view kEmpaticaE4 = "empatica_e4";
inline constexpr std::string_view kEmotivInsight = "emotiv_insight";
inline constexpr std::string_view kShimmer3Gsr = "shimmer3_gsr";
inline constexpr std::string_view kPolarH10 = "polar_h10";
inline constexpr std::string_view kVernierBelt = "vernier_respiration_belt";
inline constexpr std::string_view kZephyrBioharness = "zephyr_bioharness";

/// The six driver names in a fixed order.
const std::vector<std::string> & driver_names();

/// How the bioharness "1.008 Hz" breathing figure is read.
enum class BreathingRateMode
{
  /// 1.008 messages per second of 18 samples each (about 18.1 samples/s).
  kMessageRate,
  /// 1.008 samples per second, so one 18-sample message every ~17.9 s.
  kSampleRate,
};

/// Channel layout of a driver. Throws ConfigError for an unknown name.
SensorSpec driver_spec(
  std::string_view driver,
  BreathingRateMode breathing = BreathingRateMode::kMessageRate);

/// Sets nominal rates from `channel -> hz`. Throws ConfigError for unknown
/// channels or non-positive rates.
void apply_rate_overrides(SensorSpec & spec, const std::map<std::string, double> & overrides);

/// Parses `ch=hz`. Throws ConfigError.
std::pair<std::string, double> parse_rate_override(std::string_view text);

// Emotiv vector layouts.
inline constexpr std::size_t kEmotivEegChannels = 5;
inline constexpr std::array<std::string_view, kEmotivEegChannels> kEmotivEegNames{
  "AF3", "AF4", "T7", "T8", "Pz"};
inline constexpr std::array<std::string_view, 6> kEmotivMetrics{
  "RUI", "ENG", "VAL", "EXC", "FOC", "MED"};
/// pow: per EEG channel, [theta, alpha, low beta, high beta, gamma].
inline constexpr std::size_t kEmotivPowWidth = kEmotivEegChannels * sim::kEegBands;
/// mot: [q0, q1, q2, q3, acc_x, acc_y, acc_z, mag_x, mag_y, mag_z].
inline constexpr std::size_t kEmotivMotWidth = 10;
/// dev: [battery_pct, contact quality AF3, AF4, T7, T8, Pz], quality 0..4.
inline constexpr std::size_t kEmotivDevWidth = 6;

enum class Backend { kSim, kDevice, kLsl };

/// Throws ConfigError.
Backend backend_from_string(std::string_view s);
std::string_view to_string(Backend b) noexcept;

struct DriverOptions
{
  sim::SimConfig sim;
  /// Pace sim events on the wall clock; otherwise every event is due at once.
  bool realtime = true;
  /// Stop the sim backend after this much stream time.
  std::optional<double> duration_s;

  /// Device backend input: a file, FIFO, or serial device path.
  std::string device_path;
  /// Directory holding `<stream>.csv` LSL replay files or FIFOs.
  std::string lsl_dir = ".";
  int lsl_retries = 3;
  std::chrono::milliseconds lsl_retry_interval{500};

  /// Playback speed for regular-file device and LSL inputs; FIFOs and serial
  /// devices are paced by their writer.
  double replay_speed = 1.0;
};

/// Deterministic source driven by the signal simulators. Channel lanes run
/// at their nominal rates; missing channels are skipped.
std::unique_ptr<SampleSource> make_sim_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options);

/// Decoder-backed source reading the device stream at options.device_path:
/// BLE heart-rate notifications as hex lines for polar_h10, strap frames for
/// zephyr_bioharness. Throws BackendUnavailable for other drivers or an
/// unopenable path.
std::unique_ptr<SampleSource> make_device_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options);

/// LSL stream name to channel mapping used by the bridge for a driver.
const std::map<std::string, std::string> & lsl_stream_map(std::string_view driver);

/// Bridge source over LSL replay files or FIFOs. Streams are mapped through
/// lsl_stream_map() or, failing that, by channel name. Missing streams are
/// skipped; throws BackendUnavailable once retries find none.
std::unique_ptr<SampleSource> make_lsl_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options);

std::unique_ptr<SampleSource> make_source(
  Backend backend, std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options);

/// Queue-backed sources report overflow drops through this interface.
class DropCounter
{
public:
  virtual ~DropCounter() = default;
  virtual std::uint64_t dropped_events() const = 0;
};

}  // namespace biohub

#endif  // BIOHUB__DRIVERS_HPP_
