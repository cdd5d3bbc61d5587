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

#include "biohub/hr_measurement.hpp"

#include "biohub/byte_io.hpp"
#include "biohub/error.hpp"

namespace biohub
{

DecodedHr decode_hr_measurement(std::span<const std::uint8_t> bytes)
{
  if (bytes.empty()) {
    throw CodecError("heart rate measurement is empty");
  }
  DecodedHr out;
  HrMeasurement & m = out.measurement;
  m.flags = bytes[0];
  std::size_t pos = 1;
  auto need = [&](std::size_t n, const char * field) {
      if (bytes.size() - pos < n) {
        throw CodecError(std::string("heart rate measurement truncated at ") + field);
      }
    };
  if (m.flags & HrMeasurement::kHrU16) {
    need(2, "hr");
    m.hr = get_u16(bytes.data() + pos);
    pos += 2;
  } else {
    need(1, "hr");
    m.hr = bytes[pos];
    pos += 1;
  }
  if (m.flags & HrMeasurement::kEnergyPresent) {
    need(2, "energy");
    m.energy = get_u16(bytes.data() + pos);
    pos += 2;
  }
  if (m.flags & HrMeasurement::kRrPresent) {
    need(2, "rr");
    if ((bytes.size() - pos) % 2 != 0) {
      throw CodecError("heart rate measurement has a partial RR interval");
    }
    while (pos < bytes.size()) {
      m.rr_intervals.push_back(get_u16(bytes.data() + pos));
      pos += 2;
    }
  }
  out.consumed = pos;
  return out;
}

std::vector<std::uint8_t> encode_hr_measurement(const HrMeasurement & m)
{
  std::vector<std::uint8_t> out{m.flags};
  if (m.flags & HrMeasurement::kHrU16) {
    put_u16(out, m.hr);
  } else {
    if (m.hr > 0xFF) {
      throw CodecError("hr above 255 needs the u16 flag");
    }
    out.push_back(static_cast<std::uint8_t>(m.hr));
  }
  if (static_cast<bool>(m.flags & HrMeasurement::kEnergyPresent) != m.energy.has_value()) {
    throw CodecError("energy field disagrees with flags");
  }
  if (m.energy) {
    put_u16(out, *m.energy);
  }
  if (static_cast<bool>(m.flags & HrMeasurement::kRrPresent) != !m.rr_intervals.empty()) {
    throw CodecError("RR intervals disagree with flags");
  }
  for (auto rr : m.rr_intervals) {
    put_u16(out, rr);
  }
  return out;
}

}  // namespace biohub
