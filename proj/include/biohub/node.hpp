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

#ifndef BIOHUB__NODE_HPP_
#define BIOHUB__NODE_HPP_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biohub/client.hpp"
#include "biohub/message.hpp"
#include "biohub/topic.hpp"
#include "biohub/wire.hpp"

namespace biohub
{

enum class ChannelCategory { kRaw, kChunk, kHardware };

std::string_view to_string(ChannelCategory c) noexcept;

struct ChannelSpec
{
  std::string data_name;
  ChannelCategory category = ChannelCategory::kRaw;
  MsgKind kind = MsgKind::kF32;
  /// Samples (or messages, for device chunks) per second; 0 for event driven.
  double nominal_rate_hz = 0.0;
  /// Elements per sample of an F32Array raw channel.
  std::size_t width = 1;
  /// Non-zero for chunks the device delivers whole: the fixed element count.
  /// Such chunks ignore Chunk_Length.
  std::size_t device_chunk = 0;
};

struct SensorSpec
{
  std::string sensor_name;
  std::vector<ChannelSpec> channels;

  const ChannelSpec * find(std::string_view data_name) const noexcept;
  std::vector<TopicName> topics() const;

  /// Throws ConfigError when a chunk channel is not an F32Array, lacks a raw
  /// source channel, or a name is not a valid token.
  void validate() const;
};

struct NodeParams
{
  bool sensor_enable = true;
  bool chunk_enable = true;
  std::size_t chunk_length = 128;

  bool operator==(const NodeParams &) const = default;
};

/// Returns `params` with the command applied. Throws ParamError when the
/// command is malformed.
NodeParams apply_param(NodeParams params, const ParamCommand & cmd);

/// Tumbling window of f32 samples; emits exactly `capacity` elements at a time.
class ChunkAccumulator
{
public:
  explicit ChunkAccumulator(std::size_t capacity);

  /// Returns a full chunk when this sample fills the buffer, then starts over.
  std::optional<std::vector<float>> accumulate(float sample);
  /// Appends a multi-element sample. Capacity must be a multiple of its width.
  std::optional<std::vector<float>> accumulate(std::span<const float> sample);

  std::size_t fill() const noexcept {return buffer_.size();}
  std::size_t capacity() const noexcept {return capacity_;}
  void reset() noexcept {buffer_.clear();}

private:
  std::size_t capacity_;
  std::vector<float> buffer_;
};

/// One sample (or device-delivered chunk) for a named channel, due at a
/// monotonic time.
struct SourceEvent
{
  std::string channel;
  Message value;
  std::chrono::steady_clock::time_point due{};
};

class SampleSource
{
public:
  virtual ~SampleSource() = default;
  /// Next event, or nullopt when none arrived within `wait` (or the source
  /// has ended; see ended()).
  virtual std::optional<SourceEvent> next(std::chrono::milliseconds wait) = 0;
  /// True once every event has been delivered.
  virtual bool ended() const = 0;
};

/// The node's view of the bus.
class NodeTransport
{
public:
  virtual ~NodeTransport() = default;
  virtual TopicHandle announce(const TopicName & topic, MsgKind kind) = 0;
  virtual void publish(TopicHandle topic, const Message & msg) = 0;
  virtual std::optional<ParamRequest> poll_param(std::chrono::milliseconds wait) = 0;
  virtual void ack_param(std::uint32_t request_id, const ParamAck & ack) = 0;
};

class BusTransport : public NodeTransport
{
public:
  explicit BusTransport(BusClient & client)
  : client_(client) {}

  TopicHandle announce(const TopicName & topic, MsgKind kind) override
  {
    return client_.announce(topic, kind);
  }
  void publish(TopicHandle topic, const Message & msg) override {client_.publish(topic, msg);}
  std::optional<ParamRequest> poll_param(std::chrono::milliseconds wait) override
  {
    return client_.next_param(wait);
  }
  void ack_param(std::uint32_t request_id, const ParamAck & ack) override
  {
    client_.ack_param(request_id, ack);
  }

private:
  BusClient & client_;
};

struct NodeStats
{
  std::map<std::string, std::uint64_t> published;
  std::uint64_t params_applied = 0;
  std::uint64_t params_rejected = 0;
  std::uint64_t unknown_channel_events = 0;
};

/// The generalized sensor node: owns parameters, routes each source event to
/// its raw, chunk, or hardware topic, and applies parameter commands between
/// frames. Everything runs on the caller's thread.
class SensorNode
{
public:
  /// Throws ConfigError for a malformed sensor description or ParamError for params that
  /// the sensor cannot honour.
  SensorNode(SensorSpec spec, NodeParams params, SampleSource & source, NodeTransport & transport);

  /// Announces every topic, then forwards events until the source ends or
  /// `stop` is set. Partial chunks are discarded. Bus failures propagate as
  /// IoError.
  void run(const std::atomic<bool> & stop);

  const NodeParams & params() const noexcept {return params_;}
  const NodeStats & stats() const noexcept {return stats_;}
  const SensorSpec & spec() const noexcept {return spec_;}

private:
  struct Route
  {
    const ChannelSpec * channel = nullptr;
    TopicHandle topic = 0;
    // Software chunk fed by this raw channel.
    std::optional<TopicHandle> chunk_topic;
    std::string chunk_name;
    std::optional<ChunkAccumulator> accumulator;
  };

  void service_params(std::chrono::milliseconds wait);
  void handle_param(const ParamRequest & req);
  void handle_event(const SourceEvent & ev);
  void publish(TopicHandle topic, const std::string & name, const Message & msg);
  void rebuild_accumulators();
  void check_chunk_length(std::size_t length) const;

  SensorSpec spec_;
  NodeParams params_;
  SampleSource & source_;
  NodeTransport & transport_;
  std::map<std::string, Route, std::less<>> routes_;
  NodeStats stats_;
};

/// Optional node configuration: `key=value` lines, `#` comments.
///
/// Keys: sensor_name, sensor_enable, chunk_enable, chunk_length, and
/// `channel.<data_name>=true|false` to drop a channel entirely.
struct NodeConfig
{
  std::optional<std::string> sensor_name;
  std::optional<bool> sensor_enable;
  std::optional<bool> chunk_enable;
  std::optional<std::size_t> chunk_length;
  std::map<std::string, bool> channel_enable;

  /// Throws ConfigError on unknown keys or bad values.
  static NodeConfig parse(std::string_view text);
  static NodeConfig load(const std::string & path);

  /// Applies overrides to a spec and parameter set.
  void apply(SensorSpec & spec, NodeParams & params) const;
};

}  // namespace biohub

#endif  // BIOHUB__NODE_HPP_
