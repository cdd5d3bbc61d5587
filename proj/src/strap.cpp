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

#include "biohub/strap.hpp"

#include <string>

#include "biohub/byte_io.hpp"
#include "biohub/error.hpp"

namespace biohub
{

std::uint8_t strap_crc8(std::span<const std::uint8_t> bytes) noexcept
{
  std::uint8_t crc = 0;
  for (std::uint8_t b : bytes) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 1) ? static_cast<std::uint8_t>((crc >> 1) ^ 0x8C) :
        static_cast<std::uint8_t>(crc >> 1);
    }
  }
  return crc;
}

std::vector<std::uint8_t> frame_strap(const StrapFrame & f)
{
  if (f.payload.size() > 0xFF) {
    throw EncodeError("strap payload longer than 255 bytes");
  }
  std::vector<std::uint8_t> out;
  out.reserve(f.payload.size() + 4);
  out.push_back(StrapFrame::kStart);
  out.push_back(f.msg_id);
  out.push_back(static_cast<std::uint8_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  out.push_back(strap_crc8(f.payload));
  return out;
}

std::vector<StrapFrame> StrapDeframer::feed(std::span<const std::uint8_t> bytes)
{
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  std::vector<StrapFrame> out;
  std::size_t pos = 0;
  for (;;) {
    while (pos < buf_.size() && buf_[pos] != StrapFrame::kStart) {
      ++pos;
      ++skipped_;
    }
    if (buf_.size() - pos < 3) {
      break;
    }
    const std::size_t len = buf_[pos + 2];
    if (buf_.size() - pos < 4 + len) {
      break;
    }
    const std::span<const std::uint8_t> payload(buf_.data() + pos + 3, len);
    if (strap_crc8(payload) == buf_[pos + 3 + len]) {
      out.push_back(StrapFrame{buf_[pos + 1], {payload.begin(), payload.end()}});
      ++frames_;
      pos += 4 + len;
    } else {
      ++crc_errors_;
      ++pos;
    }
  }
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

namespace bioharness
{

StrapFrame encode_summary(const Summary & s)
{
  StrapFrame f{kSummaryId, {}};
  f.payload.push_back(s.hr);
  put_u16(f.payload, s.hrv_ms);
  put_f32(f.payload, s.br);
  return f;
}

Summary decode_summary(const StrapFrame & f)
{
  if (f.msg_id != kSummaryId || f.payload.size() != 7) {
    throw CodecError("not a bioharness summary frame");
  }
  return Summary{f.payload[0], get_u16(f.payload.data() + 1), get_f32(f.payload.data() + 3)};
}

StrapFrame encode_waveform(std::uint8_t msg_id, std::span<const float> samples)
{
  StrapFrame f{msg_id, {}};
  for (float v : samples) {
    put_f32(f.payload, v);
  }
  return f;
}

std::vector<float> decode_waveform(const StrapFrame & f, std::size_t count)
{
  if (f.payload.size() != 4 * count) {
    throw CodecError("waveform frame 0x" + std::to_string(f.msg_id) + " carries " +
            std::to_string(f.payload.size()) + " bytes, expected " +
            std::to_string(4 * count));
  }
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = get_f32(f.payload.data() + 4 * i);
  }
  return out;
}

}  // namespace bioharness

}  // namespace biohub
