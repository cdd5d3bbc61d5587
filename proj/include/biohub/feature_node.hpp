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

#ifndef BIOHUB__FEATURE_NODE_HPP_
#define BIOHUB__FEATURE_NODE_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biohub/client.hpp"
#include "biohub/message.hpp"
#include "biohub/topic.hpp"

namespace biohub
{

enum class FeatureKind { kMeanHr, kSdnn, kRmssd, kBreathRate, kBandPower };

/// Throws ConfigError.
FeatureKind feature_kind_from_string(std::string_view s);
std::string_view to_string(FeatureKind k) noexcept;

/// One input topic to one derived topic.
struct FeatureSpec
{
  TopicName input;
  FeatureKind feature = FeatureKind::kMeanHr;
  /// Output data name under /biosensors/<sensor>/features/; defaults to the
  /// feature name.
  std::string name;
  /// Window span in seconds. HRV windows are measured in beat time (the sum
  /// of intervals), sample windows in samples / rate.
  double window_s = 0.0;
  /// Fraction of a window shared with the next one, in [0, 1).
  double overlap = 0.5;
  /// Sample rate of the input; required for breath_rate and band_power.
  double rate_hz = 0.0;
  /// Interleaved channels per sample in array inputs, and the one to use.
  std::size_t channels = 1;
  std::size_t channel = 0;

  TopicName output() const;
  MsgKind output_kind() const noexcept;
};

/// JSON configuration:
///
///   {"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
///                  "window_s": 30, "overlap": 0.5, "name": "sdnn"}, ...]}
///
/// Missing window_s and overlap take per-feature defaults (HRV 30 s, EEG 2 s,
/// breathing 30 s; 50% overlap). Missing rate_hz and channels are looked up
/// from the driver tables when the input belongs to a known driver.
struct FeatureConfig
{
  std::vector<FeatureSpec> features;

  /// Throws ConfigError.
  static FeatureConfig parse(std::string_view json_text);
  static FeatureConfig load(const std::string & path);
};

/// Windowing state for one FeatureSpec. Pure: output depends only on the
/// input values fed so far.
class FeatureStream
{
public:
  /// Throws ConfigError for inconsistent settings.
  explicit FeatureStream(FeatureSpec spec);

  /// Feeds one message from the input topic; returns every completed
  /// window's value. Windows the feature rejects (flat or too short) are
  /// counted in skipped().
  std::vector<Message> feed(const Message & msg);

  const FeatureSpec & spec() const noexcept {return spec_;}
  std::uint64_t skipped() const noexcept {return skipped_;}
  std::uint64_t emitted() const noexcept {return emitted_;}

private:
  std::optional<Message> compute();

  FeatureSpec spec_;
  bool hrv_;
  std::size_t window_samples_ = 0;
  std::size_t hop_samples_ = 0;
  std::deque<double> values_;
  // HRV: beat time of each interval's end, and of the last emitted window.
  std::deque<double> beat_times_;
  double beat_clock_ = 0.0;
  double last_emit_ = 0.0;
  std::size_t since_emit_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t emitted_ = 0;
};

struct FeatureNodeStats
{
  std::uint64_t frames_in = 0;
  std::uint64_t published = 0;
  std::uint64_t skipped_windows = 0;
};

/// Bus client that subscribes to every configured input and publishes the
/// derived topics.
class FeatureNode
{
public:
  explicit FeatureNode(const FeatureConfig & config);

  /// Runs until `stop`. `on_ready` fires once the subscriptions are in
  /// effect. Bus loss propagates as IoError.
  void run(
    BusClient & client, const std::atomic<bool> & stop,
    const std::function<void()> & on_ready = {});

  std::vector<TopicName> outputs() const;
  const FeatureNodeStats & stats() const noexcept {return stats_;}

private:
  std::vector<FeatureStream> streams_;
  FeatureNodeStats stats_;
};

}  // namespace biohub

#endif  // BIOHUB__FEATURE_NODE_HPP_
