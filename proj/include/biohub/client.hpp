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

#ifndef BIOHUB__CLIENT_HPP_
#define BIOHUB__CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "biohub/endpoint.hpp"
#include "biohub/wire.hpp"

namespace biohub
{

/// A data frame resolved against the topic table.
struct TopicFrame
{
  TopicName topic;
  std::uint32_t seq = 0;
  std::uint64_t t_wall_ns = 0;
  std::uint64_t t_mono_ns = 0;
  Message msg;
  /// Local monotonic time at which the client decoded the frame.
  std::uint64_t recv_mono_ns = 0;
  /// Position of the frame in this client's incoming stream (all kinds).
  std::uint64_t arrival = 0;
};

/// A parameter command routed to this client by the broker.
struct ParamRequest
{
  std::uint32_t request_id = 0;
  ParamCommand command;
};

using TopicHandle = std::uint16_t;

/// Connection to a broker.
///
/// Movable between threads; used by one thread at a time. All receive paths
/// share one decode loop, so frames of every kind are buffered until asked
/// for.
class BusClient
{
public:
  /// Throws IoError when the broker is unreachable.
  explicit BusClient(const Endpoint & endpoint);

  BusClient(BusClient &&) noexcept = default;
  BusClient & operator=(BusClient &&) noexcept = default;

  /// Registers a topic for publishing. Announcing the same name twice returns
  /// the same handle.
  TopicHandle announce(const TopicName & topic, MsgKind kind);

  /// Stamps with the current clocks and the next per-topic seq.
  /// Returns the seq used.
  std::uint32_t publish(TopicHandle topic, const Message & msg);

  /// Publishes with caller-supplied stamps (replay).
  void publish_stamped(TopicHandle topic, const Message & msg, std::uint32_t seq,
    std::uint64_t t_wall_ns, std::uint64_t t_mono_ns);

  /// Adds a subscription pattern (see topic_matches).
  void subscribe(const std::string & pattern);

  /// Next data frame, or nullopt on timeout. Throws IoError when the
  /// connection is lost.
  std::optional<TopicFrame> next_frame(std::chrono::milliseconds timeout);

  /// Sends a parameter command and waits for the first ack.
  /// Throws NodeNotFound, ParamError, or TimeoutError.
  ParamAck send_param(const ParamCommand & cmd,
    std::chrono::milliseconds timeout = std::chrono::seconds(5));

  /// Incoming stream position of the ack last returned by send_param. Data
  /// frames with a larger TopicFrame::arrival were sent after it.
  std::uint64_t last_ack_arrival() const noexcept {return last_ack_arrival_;}

  /// Topics with live publishers. Throws TimeoutError.
  TopicListing list_topics(std::chrono::milliseconds timeout = std::chrono::seconds(5));

  /// Next parameter command addressed to this client's node, or nullopt.
  std::optional<ParamRequest> next_param(std::chrono::milliseconds timeout);

  void ack_param(std::uint32_t request_id, const ParamAck & ack);

  /// Topic name announced for a publishing handle.
  const TopicName & topic_of(TopicHandle handle) const;

  void close() noexcept {sock_.close();}

private:
  void send(const Frame & f);
  /// Reads whatever is available within the timeout and dispatches it.
  void pump(std::chrono::milliseconds timeout);
  void dispatch(Frame && f, std::uint64_t recv_mono);

  Socket sock_;
  std::vector<std::uint8_t> rx_;
  std::vector<std::pair<TopicName, MsgKind>> published_;
  std::vector<std::uint32_t> next_seq_;
  std::unordered_map<std::uint16_t, TopicName> remote_topics_;
  std::deque<TopicFrame> data_;
  std::deque<ParamRequest> params_;
  std::unordered_map<std::uint32_t, std::pair<ParamAck, std::uint64_t>> acks_;
  std::optional<TopicListing> listing_;
  std::uint32_t next_request_ = 1;
  std::uint64_t arrivals_ = 0;
  std::uint64_t last_ack_arrival_ = 0;
};

}  // namespace biohub

#endif  // BIOHUB__CLIENT_HPP_
