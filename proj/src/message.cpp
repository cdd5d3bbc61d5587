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

#include "biohub/message.hpp"

#include <string>

#include "biohub/byte_io.hpp"
#include "biohub/error.hpp"

namespace biohub
{

std::string_view to_string(MsgKind kind) noexcept
{
  switch (kind) {
    case MsgKind::kF32: return "Float32";
    case MsgKind::kF32Array: return "Float32MultiArray";
    case MsgKind::kU8: return "uint8";
    case MsgKind::kU16: return "uint16";
    case MsgKind::kEmpty: return "Empty";
  }
  return "unknown";
}

std::optional<MsgKind> msg_kind_from_byte(std::uint8_t byte) noexcept
{
  if (byte >= 1 && byte <= 5) {
    return static_cast<MsgKind>(byte);
  }
  return std::nullopt;
}

std::vector<double> Message::as_doubles() const
{
  return std::visit(
    [](const auto & v) -> std::vector<double> {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, std::vector<float>>) {
        return {v.begin(), v.end()};
      } else if constexpr (std::is_same_v<T, Empty>) {
        return {};
      } else {
        return {static_cast<double>(v)};
      }
    }, value_);
}

std::size_t Message::payload_size() const noexcept
{
  switch (kind()) {
    case MsgKind::kF32: return 4;
    case MsgKind::kF32Array: return 4 * std::get<std::vector<float>>(value_).size();
    case MsgKind::kU8: return 1;
    case MsgKind::kU16: return 2;
    case MsgKind::kEmpty: return 0;
  }
  return 0;
}

void Message::encode_payload(std::vector<std::uint8_t> & out) const
{
  std::visit(
    [&out](const auto & v) {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, std::vector<float>>) {
        if (v.size() > kMaxArrayElements) {
          throw EncodeError("F32Array of " + std::to_string(v.size()) +
          " elements exceeds " + std::to_string(kMaxArrayElements));
        }
        for (float f : v) {
          put_f32(out, f);
        }
      } else if constexpr (std::is_same_v<T, float>) {
        put_f32(out, v);
      } else if constexpr (std::is_same_v<T, std::uint8_t>) {
        out.push_back(v);
      } else if constexpr (std::is_same_v<T, std::uint16_t>) {
        put_u16(out, v);
      }
    }, value_);
}

Message Message::decode_payload(MsgKind kind, std::span<const std::uint8_t> bytes)
{
  auto expect = [&](std::size_t n) {
      if (bytes.size() != n) {
        throw ProtocolError(std::string("payload length ") + std::to_string(bytes.size()) +
              " does not fit " + std::string(to_string(kind)));
      }
    };
  switch (kind) {
    case MsgKind::kF32:
      expect(4);
      return Message(get_f32(bytes.data()));
    case MsgKind::kF32Array: {
        if (bytes.size() % 4 != 0) {
          throw ProtocolError("F32Array payload length is not a multiple of 4");
        }
        std::vector<float> v(bytes.size() / 4);
        for (std::size_t i = 0; i < v.size(); ++i) {
          v[i] = get_f32(bytes.data() + 4 * i);
        }
        return Message(std::move(v));
      }
    case MsgKind::kU8:
      expect(1);
      return Message(bytes[0]);
    case MsgKind::kU16:
      expect(2);
      return Message(get_u16(bytes.data()));
    case MsgKind::kEmpty:
      expect(0);
      return Message(Empty{});
  }
  throw ProtocolError("unknown message kind");
}

bool Message::bit_equal(const Message & other) const
{
  if (kind() != other.kind()) {
    return false;
  }
  std::vector<std::uint8_t> a;
  std::vector<std::uint8_t> b;
  encode_payload(a);
  other.encode_payload(b);
  return a == b;
}

}  // namespace biohub
