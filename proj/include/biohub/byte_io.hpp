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

#ifndef BIOHUB__BYTE_IO_HPP_
#define BIOHUB__BYTE_IO_HPP_

// Little-endian put/get helpers shared by the wire, bag and device codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

namespace biohub
{

inline void put_u8(std::vector<std::uint8_t> & out, std::uint8_t v) {out.push_back(v);}

inline void put_u16(std::vector<std::uint8_t> & out, std::uint16_t v)
{
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t> & out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_u64(std::vector<std::uint8_t> & out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_i64(std::vector<std::uint8_t> & out, std::int64_t v)
{
  put_u64(out, static_cast<std::uint64_t>(v));
}

inline void put_f32(std::vector<std::uint8_t> & out, float v)
{
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint16_t get_u16(const std::uint8_t * p)
{
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t * p)
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const std::uint8_t * p)
{
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | p[i];
  }
  return v;
}

inline float get_f32(const std::uint8_t * p)
{
  return std::bit_cast<float>(get_u32(p));
}

}  // namespace biohub

#endif  // BIOHUB__BYTE_IO_HPP_
