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

#ifndef BIOHUB__HR_MEASUREMENT_HPP_
#define BIOHUB__HR_MEASUREMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace biohub
{

/// Heart Rate Measurement characteristic, as notified by chest straps that
/// implement the standard BLE heart-rate profile.
///
///   flags bit 0   heart rate is u16 (else u8)
///   flags bit 1-2 sensor contact status (carried through untouched)
///   flags bit 3   energy expended u16 present
///   flags bit 4   one or more RR intervals (u16, 1/1024 s) present
struct HrMeasurement
{
  static constexpr std::uint8_t kHrU16 = 0x01;
  static constexpr std::uint8_t kEnergyPresent = 0x08;
  static constexpr std::uint8_t kRrPresent = 0x10;
  static constexpr double kRrUnitsPerSecond = 1024.0;

  std::uint8_t flags = 0;
  std::uint16_t hr = 0;
  std::optional<std::uint16_t> energy;
  std::vector<std::uint16_t> rr_intervals;

  bool operator==(const HrMeasurement &) const = default;
};

struct DecodedHr
{
  HrMeasurement measurement;
  std::size_t consumed = 0;
};

/// Throws CodecError when the bytes are shorter than the flags require, or
/// an RR interval is cut in half.
DecodedHr decode_hr_measurement(std::span<const std::uint8_t> bytes);

/// Throws CodecError when the fields disagree with the flags.
std::vector<std::uint8_t> encode_hr_measurement(const HrMeasurement & m);

}  // namespace biohub

#endif  // BIOHUB__HR_MEASUREMENT_HPP_
