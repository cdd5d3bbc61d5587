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

#ifndef BIOHUB__RECORDER_HPP_
#define BIOHUB__RECORDER_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "biohub/bag.hpp"
#include "biohub/client.hpp"

namespace biohub
{

struct RecordOptions
{
  /// Subscription patterns; empty records everything under /biosensors.
  std::vector<std::string> patterns;
  /// Frames are held this long and written in t_mono order.
  std::chrono::milliseconds reorder_window{200};
  std::optional<std::uint64_t> max_records;
  std::optional<std::chrono::milliseconds> duration;
  std::chrono::milliseconds flush_interval{100};
  /// Called once the broker has confirmed the subscriptions.
  std::function<void()> on_ready;
};

struct RecordStats
{
  std::uint64_t records = 0;
  std::uint64_t topics = 0;
  /// Frames that arrived after a later-stamped frame had already been
  /// written; they are kept, out of order.
  std::uint64_t late_frames = 0;
};

/// Subscribes `client` and appends every matching frame to a new bag at
/// `path` until `stop`, max_records, or duration. The bag is closed with its
/// trailer on every exit path; bus loss rethrows IoError after closing.
RecordStats record(
  BusClient & client, const std::string & path, const RecordOptions & options,
  const std::atomic<bool> & stop);

struct PlayOptions
{
  /// Inter-frame gaps are divided by this.
  double rate = 1.0;
  /// Play the readable prefix of a bag without a trailer instead of failing.
  bool allow_truncated = false;
};

struct PlayStats
{
  std::uint64_t frames = 0;
  double elapsed_s = 0.0;
  /// Latest publish relative to its schedule, seconds.
  double max_lateness_s = 0.0;
};

/// Republishes a bag on its original topics with the original seq and
/// timestamps. Records are released on an absolute schedule from the first
/// t_mono, so sleep error does not accumulate. Throws FormatError with the
/// byte offset for a damaged bag (after playing the intact prefix).
PlayStats play(
  const std::string & path, BusClient & client, const PlayOptions & options,
  const std::atomic<bool> & stop);

PlayStats play(
  const Bag & bag, BusClient & client, const PlayOptions & options,
  const std::atomic<bool> & stop);

}  // namespace biohub

#endif  // BIOHUB__RECORDER_HPP_
