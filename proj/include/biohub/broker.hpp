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

#ifndef BIOHUB__BROKER_HPP_
#define BIOHUB__BROKER_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>

#include "biohub/endpoint.hpp"
#include "biohub/wire.hpp"

namespace biohub
{

struct BrokerOptions
{
  /// Per-subscriber outgoing queue bound, in data frames. Oldest data frames
  /// are dropped beyond it; control frames are never dropped.
  std::size_t queue_capacity = 1024;
};

/// Topic-based pub/sub broker.
///
/// Each connection gets a reader thread and a writer thread. The topic
/// registry and fan-out tables are shared and guarded by one mutex so that
/// listings are consistent snapshots. A data frame reaches every session
/// whose subscription patterns match its topic at the moment it is handled.
class Broker
{
public:
  /// Binds and starts accepting. Throws IoError when the endpoint cannot be
  /// bound.
  explicit Broker(const Endpoint & endpoint, BrokerOptions options = {});
  ~Broker();
  Broker(const Broker &) = delete;
  Broker & operator=(const Broker &) = delete;

  /// The bound endpoint (ephemeral port resolved).
  const Endpoint & endpoint() const noexcept;

  /// Topics with at least one connected publisher, sorted by name.
  TopicListing list_topics() const;

  /// Data frames dropped across all subscriber queues so far.
  std::uint64_t dropped_frames() const;

  std::size_t session_count() const;

  /// Closes every session and joins all threads. Idempotent.
  void stop();

private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biohub

#endif  // BIOHUB__BROKER_HPP_
