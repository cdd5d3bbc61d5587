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

#include "biohub/drivers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "biohub/error.hpp"

namespace biohub
{

namespace
{

ChannelSpec raw(std::string name, double rate, MsgKind kind = MsgKind::kF32, std::size_t width = 1)
{
  return ChannelSpec{std::move(name), ChannelCategory::kRaw, kind, rate, width, 0};
}

ChannelSpec chunk(std::string name)
{
  return ChannelSpec{std::move(name), ChannelCategory::kChunk, MsgKind::kF32Array, 0.0, 1, 0};
}

ChannelSpec device_chunk(std::string name, std::size_t size, double msg_rate)
{
  return ChannelSpec{std::move(name), ChannelCategory::kChunk, MsgKind::kF32Array, msg_rate, 1,
    size};
}

ChannelSpec hardware(std::string name, double rate, MsgKind kind, std::size_t width = 1)
{
  return ChannelSpec{std::move(name), ChannelCategory::kHardware, kind, rate, width, 0};
}

constexpr double kZephyrEcgHz = 256.0;
constexpr std::size_t kZephyrEcgPerMsg = 63;
constexpr double kZephyrBreathingHz = 1.008;
constexpr std::size_t kZephyrBreathingPerMsg = 18;

}  // namespace

const std::vector<std::string> & driver_names()
{
  static const std::vector<std::string> names{
    std::string(kEmpaticaE4), std::string(kEmotivInsight), std::string(kShimmer3Gsr),
    std::string(kPolarH10), std::string(kVernierBelt), std::string(kZephyrBioharness)};
  return names;
}

SensorSpec driver_spec(std::string_view driver, BreathingRateMode breathing)
{
  SensorSpec s;
  s.sensor_name = std::string(driver);
  if (driver == kEmpaticaE4) {
    s.channels = {
      raw("bvp", 64.0), chunk("bvp_chunk"),
      raw("gsr", 4.0), chunk("gsr_chunk"),
      raw("st", 4.0), chunk("st_chunk"),
      raw("hr", 1.0),
      raw("ibi", 0.0),
      hardware("acc", 32.0, MsgKind::kF32Array, 3),
      hardware("bat", 1.0, MsgKind::kF32),
      hardware("tag", 0.0, MsgKind::kEmpty),
    };
  } else if (driver == kEmotivInsight) {
    s.channels = {
      raw("eeg", 128.0, MsgKind::kF32Array, kEmotivEegChannels), chunk("eeg_chunk"),
      raw("pow", 8.0, MsgKind::kF32Array, kEmotivPowWidth), chunk("pow_chunk"),
      raw("met", 2.0, MsgKind::kF32Array, kEmotivMetrics.size()),
      hardware("mot", 32.0, MsgKind::kF32Array, kEmotivMotWidth),
      hardware("dev", 2.0, MsgKind::kF32Array, kEmotivDevWidth),
    };
  } else if (driver == kShimmer3Gsr) {
    s.channels = {
      raw("gsr", 128.0), chunk("gsr_chunk"),
      raw("ppg", 128.0), chunk("ppg_chunk"),
    };
  } else if (driver == kPolarH10) {
    s.channels = {raw("hr", 1.0)};
  } else if (driver == kVernierBelt) {
    s.channels = {
      raw("bpm", 1.0), chunk("bpm_chunk"),
      raw("force", 50.0), chunk("force_chunk"),
    };
  } else if (driver == kZephyrBioharness) {
    const double br_msg_rate = breathing == BreathingRateMode::kMessageRate ?
      kZephyrBreathingHz : kZephyrBreathingHz / static_cast<double>(kZephyrBreathingPerMsg);
    s.channels = {
      raw("hr", 1.0, MsgKind::kU8),
      raw("hrv", 1.0, MsgKind::kU16),
      device_chunk("ecg_chunk", kZephyrEcgPerMsg,
        kZephyrEcgHz / static_cast<double>(kZephyrEcgPerMsg)),
      raw("br", 1.0),
      device_chunk("br_chunk", kZephyrBreathingPerMsg, br_msg_rate),
    };
  } else {
    throw ConfigError("unknown sensor '" + std::string(driver) + "'");
  }
  return s;
}

void apply_rate_overrides(SensorSpec & spec, const std::map<std::string, double> & overrides)
{
  for (const auto & [name, hz] : overrides) {
    auto it = std::find_if(
      spec.channels.begin(), spec.channels.end(),
      [&](const ChannelSpec & c) {return c.data_name == name;});
    if (it == spec.channels.end()) {
      throw ConfigError("rate override names unknown channel '" + name + "'");
    }
    if (!(hz > 0.0) || !std::isfinite(hz)) {
      throw ConfigError("rate override for " + name + " must be positive");
    }
    if (it->nominal_rate_hz == 0.0) {
      throw ConfigError("channel " + name + " has no fixed rate to override");
    }
    it->nominal_rate_hz = hz;
  }
}

std::pair<std::string, double> parse_rate_override(std::string_view text)
{
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("rate override must look like channel=hz, got '" + std::string(text) + "'");
  }
  double hz = 0.0;
  const auto value = text.substr(eq + 1);
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), hz);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ConfigError("bad rate in override '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, eq)), hz};
}

Backend backend_from_string(std::string_view s)
{
  if (s == "sim") {
    return Backend::kSim;
  }
  if (s == "device") {
    return Backend::kDevice;
  }
  if (s == "lsl") {
    return Backend::kLsl;
  }
  throw ConfigError("unknown backend '" + std::string(s) + "' (sim, device, lsl)");
}

std::string_view to_string(Backend b) noexcept
{
  switch (b) {
    case Backend::kSim: return "sim";
    case Backend::kDevice: return "device";
    case Backend::kLsl: return "lsl";
  }
  return "unknown";
}

const std::map<std::string, std::string> & lsl_stream_map(std::string_view driver)
{
  static const std::map<std::string, std::map<std::string, std::string>> maps{
    {std::string(kEmpaticaE4), {
        {"E4_Bvp", "bvp"}, {"E4_Gsr", "gsr"}, {"E4_Temperature", "st"}, {"E4_Hr", "hr"},
        {"E4_Ibi", "ibi"}, {"E4_Acc", "acc"}, {"E4_Battery", "bat"}, {"E4_Tag", "tag"}}},
    {std::string(kEmotivInsight), {
        {"EmotivDataStream-EEG", "eeg"}, {"EmotivDataStream-Band-Power", "pow"},
        {"EmotivDataStream-Performance-Metrics", "met"}, {"EmotivDataStream-Motion", "mot"},
        {"EmotivDataStream-Device-Status", "dev"}}},
    {std::string(kShimmer3Gsr), {{"Shimmer_GSR", "gsr"}, {"Shimmer_PPG", "ppg"}}},
    {std::string(kPolarH10), {{"PolarH10_HR", "hr"}}},
    {std::string(kVernierBelt), {{"GDX-RB_Force", "force"}, {"GDX-RB_Respiration_Rate", "bpm"}}},
    {std::string(kZephyrBioharness), {
        {"Zephyr_HR", "hr"}, {"Zephyr_HRV", "hrv"}, {"Zephyr_ECG", "ecg_chunk"},
        {"Zephyr_BR", "br"}, {"Zephyr_Breathing", "br_chunk"}}},
  };
  auto it = maps.find(std::string(driver));
  if (it == maps.end()) {
    throw ConfigError("unknown sensor '" + std::string(driver) + "'");
  }
  return it->second;
}

std::unique_ptr<SampleSource> make_source(
  Backend backend, std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options)
{
  switch (backend) {
    case Backend::kSim: return make_sim_source(driver, spec, options);
    case Backend::kDevice: return make_device_source(driver, spec, options);
    case Backend::kLsl: return make_lsl_source(driver, spec, options);
  }
  throw ConfigError("unknown backend");
}

}  // namespace biohub
