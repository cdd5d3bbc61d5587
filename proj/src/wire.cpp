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

#include "biohub/wire.hpp"

#include <string>

#include "biohub/byte_io.hpp"
#include "biohub/error.hpp"

namespace biohub
{

namespace
{

bool is_known_frame_kind(std::uint8_t b)
{
  return b >= 1 && b <= 7;
}

// Sequential reader over a control body; throws ProtocolError on underrun.
class BodyReader
{
public:
  explicit BodyReader(std::span<const std::uint8_t> b)
  : bytes_(b) {}

  std::span<const std::uint8_t> take(std::size_t n)
  {
    if (bytes_.size() - pos_ < n) {
      throw ProtocolError("control body truncated");
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {return take(1)[0];}
  std::uint16_t u16() {return get_u16(take(2).data());}
  std::uint64_t u64() {return get_u64(take(8).data());}
  std::string str(std::size_t n)
  {
    auto s = take(n);
    return {s.begin(), s.end()};
  }
  std::string rest()
  {
    return str(bytes_.size() - pos_);
  }
  void finish() const
  {
    if (pos_ != bytes_.size()) {
      throw ProtocolError("trailing bytes in control body");
    }
  }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_param_value(std::vector<std::uint8_t> & out, const ParamValue & v)
{
  if (const bool * b = std::get_if<bool>(&v)) {
    out.push_back(0);
    put_i64(out, *b ? 1 : 0);
  } else {
    out.push_back(1);
    put_i64(out, std::get<std::int64_t>(v));
  }
}

ParamValue read_param_value(BodyReader & r)
{
  const auto type = r.u8();
  const auto raw = static_cast<std::int64_t>(r.u64());
  if (type == 0) {
    if (raw != 0 && raw != 1) {
      throw ProtocolError("boolean parameter value out of range");
    }
    return raw == 1;
  }
  if (type == 1) {
    return raw;
  }
  throw ProtocolError("unknown parameter value type");
}

ParamKey read_param_key(BodyReader & r)
{
  const auto k = r.u8();
  if (k < 1 || k > 3) {
    throw ProtocolError("unknown parameter key");
  }
  return static_cast<ParamKey>(k);
}

void put_short_string(std::vector<std::uint8_t> & out, const std::string & s)
{
  if (s.size() > 0xFF) {
    throw EncodeError("string longer than 255 bytes");
  }
  out.push_back(static_cast<std::uint8_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

void encode_frame(const Frame & frame, std::vector<std::uint8_t> & out)
{
  const bool data = frame.kind == FrameKind::kData;
  const std::size_t payload = data ? frame.msg.payload_size() : frame.body.size();
  if (payload > 0xFFFF) {
    throw EncodeError("payload of " + std::to_string(payload) + " bytes exceeds u16 length");
  }
  out.reserve(out.size() + kFrameHeaderSize + payload);
  put_u16(out, kFrameMagic);
  put_u8(out, kWireVersion);
  put_u8(out, static_cast<std::uint8_t>(frame.kind));
  put_u16(out, frame.topic_id);
  put_u32(out, frame.seq);
  put_u64(out, frame.t_wall_ns);
  put_u64(out, frame.t_mono_ns);
  put_u8(out, data ? static_cast<std::uint8_t>(frame.msg.kind()) : 0);
  put_u16(out, static_cast<std::uint16_t>(payload));
  if (data) {
    frame.msg.encode_payload(out);
  } else {
    out.insert(out.end(), frame.body.begin(), frame.body.end());
  }
}

std::vector<std::uint8_t> encode_frame(const Frame & frame)
{
  std::vector<std::uint8_t> out;
  encode_frame(frame, out);
  return out;
}

std::optional<DecodedFrame> decode_frame(std::span<const std::uint8_t> bytes)
{
  // Validate whatever prefix is available before asking for more bytes, so a
  // corrupt stream fails fast.
  if (bytes.size() >= 2 && get_u16(bytes.data()) != kFrameMagic) {
    throw ProtocolError("bad frame magic");
  }
  if (bytes.size() >= 3 && bytes[2] != kWireVersion) {
    throw ProtocolError("unsupported wire version " + std::to_string(bytes[2]));
  }
  if (bytes.size() >= 4 && !is_known_frame_kind(bytes[3])) {
    throw ProtocolError("unknown frame kind " + std::to_string(bytes[3]));
  }
  if (bytes.size() < kFrameHeaderSize) {
    return std::nullopt;
  }
  const std::uint8_t * p = bytes.data();
  Frame f;
  f.kind = static_cast<FrameKind>(p[3]);
  f.topic_id = get_u16(p + 4);
  f.seq = get_u32(p + 6);
  f.t_wall_ns = get_u64(p + 10);
  f.t_mono_ns = get_u64(p + 18);
  const std::uint8_t kind_byte = p[26];
  const std::size_t len = get_u16(p + 27);

  if (f.kind == FrameKind::kData) {
    if (!msg_kind_from_byte(kind_byte)) {
      throw ProtocolError("unknown message kind " + std::to_string(kind_byte));
    }
  } else if (kind_byte != 0) {
    throw ProtocolError("control frame with non-zero message kind");
  }
  if (bytes.size() < kFrameHeaderSize + len) {
    return std::nullopt;
  }
  const auto payload = bytes.subspan(kFrameHeaderSize, len);
  if (f.kind == FrameKind::kData) {
    f.msg = Message::decode_payload(static_cast<MsgKind>(kind_byte), payload);
  } else {
    f.body.assign(payload.begin(), payload.end());
  }
  return DecodedFrame{std::move(f), kFrameHeaderSize + len};
}

std::vector<std::uint8_t> encode_announce(const TopicAnnounce & a)
{
  const std::string name = a.topic.str();
  std::vector<std::uint8_t> out(name.begin(), name.end());
  out.push_back(static_cast<std::uint8_t>(a.kind));
  return out;
}

TopicAnnounce decode_announce(std::span<const std::uint8_t> body)
{
  if (body.size() < 2) {
    throw ProtocolError("topic announce body too short");
  }
  const auto kind = msg_kind_from_byte(body.back());
  if (!kind) {
    throw ProtocolError("topic announce with unknown message kind");
  }
  const std::string name(body.begin(), body.end() - 1);
  try {
    return TopicAnnounce{TopicName::parse(name), *kind};
  } catch (const TopicError & e) {
    throw ProtocolError(std::string("announce rejected: ") + e.what());
  }
}

std::string_view to_string(ParamKey key) noexcept
{
  switch (key) {
    case ParamKey::kSensorEnable: return "Sensor_Enable";
    case ParamKey::kChunkEnable: return "Chunk_Enable";
    case ParamKey::kChunkLength: return "Chunk_Length";
  }
  return "unknown";
}

std::optional<ParamKey> param_key_from_string(std::string_view name) noexcept
{
  for (auto k : {ParamKey::kSensorEnable, ParamKey::kChunkEnable, ParamKey::kChunkLength}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  return std::nullopt;
}

void ParamCommand::validate() const
{
  const bool is_bool = std::holds_alternative<bool>(value);
  if (key == ParamKey::kChunkLength) {
    if (is_bool) {
      throw ParamError("Chunk_Length takes a positive integer");
    }
    if (std::get<std::int64_t>(value) < 1) {
      throw ParamError("Chunk_Length must be >= 1");
    }
  } else if (!is_bool) {
    throw ParamError(std::string(to_string(key)) + " takes a boolean");
  }
}

std::string param_value_string(const ParamValue & v)
{
  if (const bool * b = std::get_if<bool>(&v)) {
    return *b ? "true" : "false";
  }
  return std::to_string(std::get<std::int64_t>(v));
}

std::vector<std::uint8_t> encode_param_command(const ParamCommand & c)
{
  std::vector<std::uint8_t> out;
  put_short_string(out, c.node);
  out.push_back(static_cast<std::uint8_t>(c.key));
  put_param_value(out, c.value);
  return out;
}

ParamCommand decode_param_command(std::span<const std::uint8_t> body)
{
  BodyReader r(body);
  ParamCommand c;
  c.node = r.str(r.u8());
  c.key = read_param_key(r);
  c.value = read_param_value(r);
  r.finish();
  return c;
}

std::vector<std::uint8_t> encode_param_ack(const ParamAck & a)
{
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(a.status));
  put_short_string(out, a.node);
  out.push_back(static_cast<std::uint8_t>(a.key));
  put_param_value(out, a.value);
  out.insert(out.end(), a.message.begin(), a.message.end());
  return out;
}

ParamAck decode_param_ack(std::span<const std::uint8_t> body)
{
  BodyReader r(body);
  ParamAck a;
  const auto status = r.u8();
  if (status > 2) {
    throw ProtocolError("unknown parameter ack status");
  }
  a.status = static_cast<ParamStatus>(status);
  a.node = r.str(r.u8());
  a.key = read_param_key(r);
  a.value = read_param_value(r);
  a.message = r.rest();
  return a;
}

std::vector<std::uint8_t> encode_topic_list(const TopicListing & l)
{
  if (l.topics.size() > 0xFFFF) {
    throw EncodeError("too many topics for one listing");
  }
  std::vector<std::uint8_t> out;
  put_u16(out, static_cast<std::uint16_t>(l.topics.size()));
  for (const auto & t : l.topics) {
    out.push_back(static_cast<std::uint8_t>(t.kind));
    put_u16(out, t.publishers);
    put_short_string(out, t.topic.str());
  }
  put_u64(out, l.dropped_frames);
  return out;
}

TopicListing decode_topic_list(std::span<const std::uint8_t> body)
{
  BodyReader r(body);
  TopicListing l;
  const auto n = r.u16();
  for (std::uint16_t i = 0; i < n; ++i) {
    TopicInfo t;
    const auto kind = msg_kind_from_byte(r.u8());
    if (!kind) {
      throw ProtocolError("topic list entry with unknown kind");
    }
    t.kind = *kind;
    t.publishers = r.u16();
    try {
      t.topic = TopicName::parse(r.str(r.u8()));
    } catch (const TopicError & e) {
      throw ProtocolError(e.what());
    }
    l.topics.push_back(std::move(t));
  }
  l.dropped_frames = r.u64();
  r.finish();
  return l;
}

}  // namespace biohub
