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

#ifndef BIOHUB__CLOCK_HPP_
#define BIOHUB__CLOCK_HPP_

#include <chrono>
#include <cstdint>

namespace biohub
{

/// Nanoseconds since the Unix epoch.
inline std::uint64_t now_wall_ns()
{
  return static_cast<std::uint64_t>(
    std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::system_clock::now().time_since_epoch()).count());
}

/// Nanoseconds on the host monotonic clock. Comparable across processes on
/// the same host.
inline std::uint64_t now_mono_ns()
{
  return static_cast<std::uint64_t>(
    std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now().time_since_epoch()).count());
}

inline std::chrono::steady_clock::time_point mono_to_time_point(std::uint64_t ns)
{
  return std::chrono::steady_clock::time_point(
    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::nanoseconds(ns)));
}

}  // namespace biohub

#endif  // BIOHUB__CLOCK_HPP_
