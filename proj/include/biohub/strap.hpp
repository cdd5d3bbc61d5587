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

#ifndef BIOHUB__STRAP_HPP_
#define BIOHUB__STRAP_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace biohub
{

/// Chest-strap serial framing:
///
///   0x02 | msg_id u8 | len u8 | payload[len] | crc8(payload)
///
/// CRC-8 uses the reflected polynomial 0x8C with initial value 0.
struct StrapFrame
{
  static constexpr std::uint8_t kStart = 0x02;

  std::uint8_t msg_id = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const StrapFrame &) const = default;
};

std::uint8_t strap_crc8(std::span<const std::uint8_t> bytes) noexcept;

/// Throws EncodeError when the payload exceeds 255 bytes.
std::vector<std::uint8_t> frame_strap(const StrapFrame & f);

/// Incremental deframer. Resynchronizes on the start byte; frames whose CRC
/// fails are dropped and counted, and scanning resumes one byte after their
/// start byte.
class StrapDeframer
{
public:
  std::vector<StrapFrame> feed(std::span<const std::uint8_t> bytes);

  std::uint64_t frames() const noexcept {return frames_;}
  std::uint64_t crc_errors() const noexcept {return crc_errors_;}
  std::uint64_t skipped_bytes() const noexcept {return skipped_;}
  std::size_t buffered() const noexcept {return buf_.size();}

private:
  std::vector<std::uint8_t> buf_;
  std::uint64_t frames_ = 0;
  std::uint64_t crc_errors_ = 0;
  std::uint64_t skipped_ = 0;
};

/// Bioharness message payloads carried in strap frames.
namespace bioharness
{

inline constexpr std::uint8_t kSummaryId = 0x20;
inline constexpr std::uint8_t kEcgId = 0x21;
inline constexpr std::uint8_t kBreathingId = 0x22;
inline constexpr std::size_t kEcgSamples = 63;
inline constexpr std::size_t kBreathingSamples = 18;

/// 1 Hz summary: hr u8 | hrv u16 (ms) | br f32 (breaths/min).
struct Summary
{
  std::uint8_t hr = 0;
  std::uint16_t hrv_ms = 0;
  float br = 0.0f;

  bool operator==(const Summary &) const = default;
};

StrapFrame encode_summary(const Summary & s);
/// Throws CodecError on a wrong id or length.
Summary decode_summary(const StrapFrame & f);

/// Waveform payload: `count` little-endian f32 samples.
StrapFrame encode_waveform(std::uint8_t msg_id, std::span<const float> samples);
/// Throws CodecError unless the frame holds exactly `count` samples.
std::vector<float> decode_waveform(const StrapFrame & f, std::size_t count);

}  // namespace bioharness

}  // namespace biohub

#endif  // BIOHUB__STRAP_HPP_
