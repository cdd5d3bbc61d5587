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

#ifndef BIOHUB__MESSAGE_HPP_
#define BIOHUB__MESSAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace biohub
{

enum class MsgKind : std::uint8_t
{
  kF32 = 1,
  kF32Array = 2,
  kU8 = 3,
  kU16 = 4,
  kEmpty = 5,
};

std::string_view to_string(MsgKind kind) noexcept;
std::optional<MsgKind> msg_kind_from_byte(std::uint8_t byte) noexcept;

struct Empty
{
  bool operator==(const Empty &) const = default;
};

/// Largest F32Array that fits a u16 payload length.
inline constexpr std::size_t kMaxArrayElements = 0xFFFF / sizeof(float);

/// Tagged payload. Alternative order matches MsgKind order.
class Message
{
public:
  using Value = std::variant<float, std::vector<float>, std::uint8_t, std::uint16_t, Empty>;

  Message()
  : value_(Empty{}) {}
  Message(float v)  // NOLINT(runtime/explicit)
  : value_(v) {}
  Message(std::vector<float> v)  // NOLINT(runtime/explicit)
  : value_(std::move(v)) {}
  Message(std::uint8_t v)  // NOLINT(runtime/explicit)
  : value_(v) {}
  Message(std::uint16_t v)  // NOLINT(runtime/explicit)
  : value_(v) {}
  Message(Empty v)  // NOLINT(runtime/explicit)
  : value_(v) {}

  MsgKind kind() const noexcept
  {
    return static_cast<MsgKind>(value_.index() + 1);
  }

  const Value & value() const noexcept {return value_;}

  template<typename T>
  const T & get() const {return std::get<T>(value_);}

  /// Numeric view used by echo and CSV export. Empty yields no values.
  std::vector<double> as_doubles() const;

  /// Byte length of the encoded payload.
  std::size_t payload_size() const noexcept;

  /// Appends the little-endian payload. Throws EncodeError for oversize arrays.
  void encode_payload(std::vector<std::uint8_t> & out) const;

  /// Decodes a payload of exactly `bytes.size()` bytes. Throws ProtocolError
  /// when the length does not fit the kind.
  static Message decode_payload(MsgKind kind, std::span<const std::uint8_t> bytes);

  /// Bitwise equality; NaN payloads compare by bit pattern.
  bool bit_equal(const Message & other) const;

  bool operator==(const Message & other) const {return bit_equal(other);}

private:
  Value value_;
};

}  // namespace biohub

#endif  // BIOHUB__MESSAGE_HPP_
