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

#ifndef BIOHUB__WIRE_HPP_
#define BIOHUB__WIRE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "biohub/message.hpp"
#include "biohub/topic.hpp"

namespace biohub
{

inline constexpr std::uint16_t kFrameMagic = 0xB105;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 29;

enum class FrameKind : std::uint8_t
{
  kData = 1,
  kTopicAnnounce = 2,
  kParamSet = 3,
  kParamAck = 4,
  kSubscribe = 5,
  kTopicQuery = 6,
  kTopicList = 7,
};

/// One unit on the wire.
///
/// Data frames carry `msg`; every other kind carries an opaque `body` and
/// msg_kind 0 in the header.
struct Frame
{
  FrameKind kind = FrameKind::kData;
  std::uint16_t topic_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t t_wall_ns = 0;
  std::uint64_t t_mono_ns = 0;
  Message msg;
  std::vector<std::uint8_t> body;

  bool operator==(const Frame &) const = default;
};

struct DecodedFrame
{
  Frame frame;
  std::size_t consumed = 0;
};

/// Appends the encoded frame to `out`. Throws EncodeError on oversize payload.
void encode_frame(const Frame & frame, std::vector<std::uint8_t> & out);
std::vector<std::uint8_t> encode_frame(const Frame & frame);

/// Decodes one frame from the front of `bytes`.
///
/// Returns std::nullopt when more bytes are needed. Throws ProtocolError on a
/// bad magic, version, frame kind, message kind, or kind/length mismatch.
/// Never reads past the declared payload length.
std::optional<DecodedFrame> decode_frame(std::span<const std::uint8_t> bytes);

// Control bodies ------------------------------------------------------------

struct TopicAnnounce
{
  TopicName topic;
  MsgKind kind = MsgKind::kF32;
};

std::vector<std::uint8_t> encode_announce(const TopicAnnounce & a);
TopicAnnounce decode_announce(std::span<const std::uint8_t> body);

enum class ParamKey : std::uint8_t
{
  kSensorEnable = 1,
  kChunkEnable = 2,
  kChunkLength = 3,
};

std::string_view to_string(ParamKey key) noexcept;
/// Accepts the canonical names (Sensor_Enable, Chunk_Enable, Chunk_Length).
std::optional<ParamKey> param_key_from_string(std::string_view name) noexcept;

using ParamValue = std::variant<bool, std::int64_t>;

struct ParamCommand
{
  std::string node;
  ParamKey key = ParamKey::kSensorEnable;
  ParamValue value = true;

  /// Throws ParamError when the value kind does not fit the key or
  /// Chunk_Length < 1.
  void validate() const;
};

std::string param_value_string(const ParamValue & v);

enum class ParamStatus : std::uint8_t
{
  kOk = 0,
  kNodeNotFound = 1,
  kParamError = 2,
};

struct ParamAck
{
  ParamStatus status = ParamStatus::kOk;
  std::string node;
  ParamKey key = ParamKey::kSensorEnable;
  ParamValue value = true;
  std::string message;
};

std::vector<std::uint8_t> encode_param_command(const ParamCommand & c);
ParamCommand decode_param_command(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_param_ack(const ParamAck & a);
ParamAck decode_param_ack(std::span<const std::uint8_t> body);

struct TopicInfo
{
  TopicName topic;
  MsgKind kind = MsgKind::kF32;
  std::uint16_t publishers = 0;

  bool operator==(const TopicInfo &) const = default;
};

struct TopicListing
{
  std::vector<TopicInfo> topics;
  std::uint64_t dropped_frames = 0;
};

std::vector<std::uint8_t> encode_topic_list(const TopicListing & l);
TopicListing decode_topic_list(std::span<const std::uint8_t> body);

}  // namespace biohub

#endif  // BIOHUB__WIRE_HPP_
